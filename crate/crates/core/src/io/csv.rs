//! Rectangular numeric CSV, one column per lead, optional header row of
//! lead names. `.` decimal separator, `,` delimiter.

use std::path::Path;

use ndarray::Array2;

use crate::error::{Error, Result};
use crate::record::EcgRecord;

fn try_numeric_row(line: &str) -> Option<Vec<f64>> {
    line.split(',')
        .map(|t| t.trim().parse::<f64>().ok())
        .collect()
}

/// Read an ECG from CSV. The sampling rate is supplied by the caller.
pub fn read_csv(path: impl AsRef<Path>, fs: f64) -> Result<EcgRecord> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path)?;
    let mut lines = text
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l))
        .filter(|(_, l)| !l.trim().is_empty());

    let (first_row, first_line) = lines
        .next()
        .ok_or_else(|| Error::InvalidInput("csv file is empty".into()))?;

    let mut rows: Vec<Vec<f64>> = Vec::new();
    let lead_names: Vec<String> = match try_numeric_row(first_line) {
        Some(row) => {
            rows.push(row);
            Vec::new()
        }
        None => first_line.split(',').map(|t| t.trim().to_string()).collect(),
    };
    let n_cols = if rows.is_empty() {
        lead_names.len()
    } else {
        rows[0].len()
    };
    if n_cols == 0 {
        return Err(Error::Parse {
            row: first_row,
            message: "no columns".into(),
        });
    }

    for (row_no, line) in lines {
        let row = try_numeric_row(line).ok_or_else(|| Error::Parse {
            row: row_no,
            message: "non-numeric value".into(),
        })?;
        if row.len() != n_cols {
            return Err(Error::Parse {
                row: row_no,
                message: format!("{} values in a {n_cols}-lead file", row.len()),
            });
        }
        rows.push(row);
    }
    if rows.is_empty() {
        return Err(Error::InvalidInput("csv file has no data rows".into()));
    }

    // columns are leads; store leads as rows
    let n_samples = rows.len();
    let mut signal = Array2::zeros((n_cols, n_samples));
    for (s, row) in rows.iter().enumerate() {
        for (l, &v) in row.iter().enumerate() {
            signal[[l, s]] = v;
        }
    }
    let record_id = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default();
    EcgRecord::new(signal, fs, lead_names, record_id)
}

/// Write a `[n_leads x n_samples]` signal as CSV, one column per lead.
pub fn write_csv(
    path: impl AsRef<Path>,
    signal: &Array2<f64>,
    lead_names: Option<&[String]>,
) -> Result<()> {
    let mut out = String::new();
    if let Some(names) = lead_names {
        if names.len() != signal.nrows() {
            return Err(Error::InvalidInput(format!(
                "{} names for {} leads",
                names.len(),
                signal.nrows()
            )));
        }
        out.push_str(&names.join(","));
        out.push('\n');
    }
    for s in 0..signal.ncols() {
        for l in 0..signal.nrows() {
            if l > 0 {
                out.push(',');
            }
            out.push_str(&format_float(signal[[l, s]]));
        }
        out.push('\n');
    }
    std::fs::write(path, out)?;
    Ok(())
}

/// Write an arbitrary numeric matrix as CSV, rows as rows.
pub fn write_matrix_csv(path: impl AsRef<Path>, matrix: &Array2<f64>) -> Result<()> {
    let mut out = String::new();
    for r in 0..matrix.nrows() {
        for c in 0..matrix.ncols() {
            if c > 0 {
                out.push(',');
            }
            out.push_str(&format_float(matrix[[r, c]]));
        }
        out.push('\n');
    }
    std::fs::write(path, out)?;
    Ok(())
}

/// Shortest representation that parses back to the same f64.
fn format_float(v: f64) -> String {
    let mut s = format!("{v}");
    if !s.contains('.') && !s.contains('e') && s.parse::<f64>().is_ok() && v.fract() == 0.0 {
        s.push_str(".0");
    }
    s
}
