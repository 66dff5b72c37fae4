//! WFDB record reader (text header + format-16 signal file).
//!
//! Only signal format 16 (16-bit two's-complement, little-endian,
//! lead-interleaved) is supported; anything else fails loudly.

use std::path::Path;

use ndarray::Array2;

use crate::error::{Error, Result};
use crate::record::EcgRecord;

/// Gain applied when a signal line omits it, ADC units per millivolt.
const DEFAULT_ADC_GAIN: f64 = 200.0;

#[derive(Debug, Clone, PartialEq)]
pub struct WfdbLeadSpec {
    pub file_name: String,
    pub format_code: u32,
    /// ADC units per millivolt.
    pub adc_gain: f64,
    /// ADC value corresponding to 0 mV.
    pub baseline: i32,
    pub lead_name: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct WfdbHeader {
    pub record_name: String,
    pub n_leads: usize,
    pub fs: f64,
    pub n_samples: usize,
    pub leads: Vec<WfdbLeadSpec>,
}

fn content_lines(text: &str) -> impl Iterator<Item = (usize, &str)> {
    text.lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim()))
        .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'))
}

fn parse_err(row: usize, message: impl Into<String>) -> Error {
    Error::Parse {
        row,
        message: message.into(),
    }
}

/// Parse the `gain(baseline)/units` field of a signal line.
fn parse_gain_spec(token: &str, row: usize) -> Result<(f64, i32)> {
    let before_units = token.split('/').next().unwrap_or(token);
    let (gain_str, baseline) = match before_units.find('(') {
        Some(open) => {
            let close = before_units
                .find(')')
                .ok_or_else(|| parse_err(row, "unclosed baseline parenthesis"))?;
            let baseline: i32 = before_units[open + 1..close]
                .parse()
                .map_err(|_| parse_err(row, "baseline is not an integer"))?;
            (&before_units[..open], baseline)
        }
        None => (before_units, 0),
    };
    let gain: f64 = gain_str
        .parse()
        .map_err(|_| parse_err(row, format!("gain `{gain_str}` is not a number")))?;
    if !(gain > 0.0) {
        return Err(parse_err(row, format!("gain must be positive, got {gain}")));
    }
    Ok((gain, baseline))
}

/// Parse a WFDB text header.
pub fn read_wfdb_header(path: impl AsRef<Path>) -> Result<WfdbHeader> {
    let text = std::fs::read_to_string(path.as_ref())?;
    let mut lines = content_lines(&text);

    let (row, record_line) = lines
        .next()
        .ok_or_else(|| Error::CorruptFile("header has no record line".into()))?;
    let fields: Vec<&str> = record_line.split_whitespace().collect();
    if fields.len() < 4 {
        return Err(parse_err(
            row,
            "record line needs `name n_leads fs n_samples`",
        ));
    }
    let record_name = fields[0].split('/').next().unwrap_or(fields[0]).to_string();
    let n_leads: usize = fields[1]
        .parse()
        .map_err(|_| parse_err(row, "lead count is not an integer"))?;
    let fs: f64 = fields[2]
        .split('/')
        .next()
        .unwrap_or(fields[2])
        .parse()
        .map_err(|_| parse_err(row, "sampling rate is not a number"))?;
    let n_samples: usize = fields[3]
        .parse()
        .map_err(|_| parse_err(row, "sample count is not an integer"))?;
    if n_leads == 0 || n_samples == 0 || !(fs > 0.0) {
        return Err(Error::CorruptFile(
            "record line declares an empty record".into(),
        ));
    }

    let mut leads = Vec::with_capacity(n_leads);
    for i in 0..n_leads {
        let (row, line) = lines
            .next()
            .ok_or_else(|| Error::CorruptFile(format!("missing signal line for lead {i}")))?;
        let fields: Vec<&str> = line.split_whitespace().collect();
        if fields.len() < 2 {
            return Err(parse_err(row, "signal line needs `file format ...`"));
        }
        let format_code: u32 = fields[1].parse().map_err(|_| {
            Error::UnsupportedFormat(format!("signal format `{}` is not plain numeric", fields[1]))
        })?;
        let (adc_gain, baseline) = match fields.get(2) {
            Some(tok) => parse_gain_spec(tok, row)?,
            None => {
                log::warn!(
                    "lead {i}: no gain field, assuming {DEFAULT_ADC_GAIN} units/mV and baseline 0"
                );
                (DEFAULT_ADC_GAIN, 0)
            }
        };
        let lead_name = if fields.len() > 8 {
            fields[8..].join(" ")
        } else {
            format!("ch{i}")
        };
        leads.push(WfdbLeadSpec {
            file_name: fields[0].to_string(),
            format_code,
            adc_gain,
            baseline,
            lead_name,
        });
    }

    Ok(WfdbHeader {
        record_name,
        n_leads,
        fs,
        n_samples,
        leads,
    })
}

/// Read a WFDB record: parse the header, decode the referenced format-16
/// signal files, and convert to millivolts via `(raw - baseline) / gain`.
pub fn read_wfdb(header_path: impl AsRef<Path>) -> Result<EcgRecord> {
    let header_path = header_path.as_ref();
    let header = read_wfdb_header(header_path)?;
    for lead in &header.leads {
        if lead.format_code != 16 {
            return Err(Error::UnsupportedFormat(format!(
                "signal format {} (only format 16 is supported)",
                lead.format_code
            )));
        }
    }
    let dir = header_path.parent().unwrap_or_else(|| Path::new("."));

    // leads group by their signal file; each file interleaves its own leads
    let mut groups: Vec<(String, Vec<usize>)> = Vec::new();
    for (i, lead) in header.leads.iter().enumerate() {
        match groups.iter_mut().find(|(f, _)| *f == lead.file_name) {
            Some((_, idxs)) => idxs.push(i),
            None => groups.push((lead.file_name.clone(), vec![i])),
        }
    }

    let mut signal = Array2::zeros((header.n_leads, header.n_samples));
    for (file_name, lead_idxs) in groups {
        let bytes = std::fs::read(dir.join(&file_name))?;
        let expected = header.n_samples * lead_idxs.len() * 2;
        if bytes.len() != expected {
            return Err(Error::CorruptFile(format!(
                "{file_name}: {} bytes, header implies {expected}",
                bytes.len()
            )));
        }
        for s in 0..header.n_samples {
            for (j, &li) in lead_idxs.iter().enumerate() {
                let off = (s * lead_idxs.len() + j) * 2;
                let raw = i16::from_le_bytes([bytes[off], bytes[off + 1]]);
                let spec = &header.leads[li];
                signal[[li, s]] = (raw as f64 - spec.baseline as f64) / spec.adc_gain;
            }
        }
    }

    EcgRecord::new(
        signal,
        header.fs,
        header.leads.iter().map(|l| l.lead_name.clone()).collect(),
        header.record_name,
    )
}
