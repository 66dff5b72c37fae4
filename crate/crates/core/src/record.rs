//! The raw multi-lead ECG record type.

use ndarray::Array2;

use crate::error::{Error, Result};

/// A sampled multi-lead ECG.
///
/// `signal` is laid out `[n_leads x n_samples]` in millivolts. `lead_names`
/// is either empty (names unknown) or has one entry per lead.
#[derive(Debug, Clone, PartialEq)]
pub struct EcgRecord {
    pub signal: Array2<f64>,
    /// Sampling rate in Hz.
    pub fs: f64,
    pub lead_names: Vec<String>,
    pub record_id: String,
}

impl EcgRecord {
    pub fn new(
        signal: Array2<f64>,
        fs: f64,
        lead_names: Vec<String>,
        record_id: impl Into<String>,
    ) -> Result<Self> {
        if signal.nrows() == 0 || signal.ncols() == 0 {
            return Err(Error::InvalidInput(
                "record must have at least one lead and one sample".into(),
            ));
        }
        if !(fs > 0.0) || !fs.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "sampling rate must be positive, got {fs}"
            )));
        }
        if !lead_names.is_empty() && lead_names.len() != signal.nrows() {
            return Err(Error::InvalidInput(format!(
                "{} lead names for {} leads",
                lead_names.len(),
                signal.nrows()
            )));
        }
        Ok(Self {
            signal,
            fs,
            lead_names,
            record_id: record_id.into(),
        })
    }

    pub fn n_leads(&self) -> usize {
        self.signal.nrows()
    }

    pub fn n_samples(&self) -> usize {
        self.signal.ncols()
    }

    /// Index of a lead by name, if names are present.
    pub fn lead_index(&self, name: &str) -> Option<usize> {
        self.lead_names.iter().position(|n| n == name)
    }
}
