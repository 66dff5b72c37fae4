//! Temporal alignment of ECG recordings to a uniform R-peak template.
//!
//! The pipeline detects R-peaks on a cleaned lead, resamples every cardiac
//! cycle onto a fixed template grid (plain linear stretching or the
//! heart-rate-corrected three-segment variant), and reduces aligned signals
//! to median beats. On top of the aligned representation the crate provides
//! the shallow-analysis toolkit commonly applied to it: PCA, k-means and
//! Ward clustering, V-measure, calibration error, logistic regression,
//! grouped permutation importance, and macro AUC.
//!
//! A synthetic ECG generator with exact ground truth serves as the test
//! oracle, and `io` reads WFDB/CSV records and a binary array container.

pub mod align;
pub mod analysis;
pub mod dsp;
pub mod error;
pub mod io;
pub mod record;
pub mod rpeak;
pub mod synth;

pub use align::{
    align_hrc, align_linear, align_none_median, design_template, hrc_segment_bounds, median_beat,
    median_beat_with, AlignedEcg, HrcCoefficients, OutputKind, Strategy, Template,
};
pub use error::{Error, Result};
pub use record::EcgRecord;
pub use rpeak::{
    annotate_record, clean_lead, detect_r_peaks, detect_r_peaks_with, estimate_heart_rate,
    DetectorConfig, RPeakAnnotation,
};
pub use synth::{generate_ecg, GroundTruth, SynthSpec, WaveParams, WaveSet};
