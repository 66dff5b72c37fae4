//! Shallow-analysis building blocks used on aligned data: PCA (full and
//! interval-restricted), k-means, Ward hierarchical clustering, clustering
//! and calibration metrics, logistic regression, and grouped permutation
//! importance.

mod importance;
mod kmeans;
mod logreg;
mod metrics;
mod pca;
mod ward;

pub use importance::{beat_intervals, grouped_permutation_importance, ImportanceMap};
pub use kmeans::{kmeans, kmeans_with, KmeansResult};
pub use logreg::{logreg_fit, logreg_loss_and_grad, logreg_predict_proba, LogisticRegression};
pub use metrics::{ece, macro_auc, v_measure, CalibrationBin, CalibrationReport};
pub use pca::{interval_pca, pca_fit, pca_inverse_transform, pca_transform, PcaResult, Wave};
pub use ward::{ward_cluster, WardMerge, WardResult};
