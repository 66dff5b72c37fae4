//! Crate-wide error type.

use crate::rpeak::RPeakAnnotation;

/// Errors produced by any operation in this crate.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    /// A configuration or parameter value is out of its valid range.
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    /// Input data violates a precondition (too short, wrong shape, non-finite, ...).
    #[error("invalid input: {0}")]
    InvalidInput(String),

    /// A requested lead does not exist in the record.
    #[error("lead not found: {0}")]
    MissingLead(String),

    /// R-peak detection found fewer than two peaks; the partial result is attached.
    #[error("detection failed: found {} peak(s), need at least 2", partial.peaks.len())]
    DetectionFailed {
        /// Whatever was detected before the failure was established.
        partial: RPeakAnnotation,
    },

    /// Alignment could not be carried out for this record.
    #[error("alignment failed: {0}")]
    AlignmentFailed(String),

    /// A file declares a format this crate does not read.
    #[error("unsupported format: {0}")]
    UnsupportedFormat(String),

    /// A file's contents contradict its own declared structure.
    #[error("corrupt file: {0}")]
    CorruptFile(String),

    /// Text input could not be parsed; `row` is 1-based.
    #[error("parse error at row {row}: {message}")]
    Parse { row: usize, message: String },

    /// A metric is undefined for the given inputs (e.g. a class missing from labels).
    #[error("metric undefined: {0}")]
    MetricUndefined(String),

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
