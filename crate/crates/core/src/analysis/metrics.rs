//! Clustering and classification metrics: V-measure, expected calibration
//! error, macro-averaged AUC.

use std::collections::HashMap;

use ndarray::Array2;

use crate::error::{Error, Result};

fn entropy_of_counts(counts: impl Iterator<Item = usize>, n: f64) -> f64 {
    counts
        .filter(|&c| c > 0)
        .map(|c| {
            let p = c as f64 / n;
            -p * p.ln()
        })
        .sum()
}

/// V-measure between a predicted and a reference labeling: the harmonic
/// mean of homogeneity and completeness (natural-log entropies).
///
/// Homogeneity is 1 when the reference has zero entropy, completeness is 1
/// when the prediction has, and V is 0 when both terms vanish.
pub fn v_measure(pred: &[usize], truth: &[usize]) -> Result<f64> {
    if pred.len() != truth.len() {
        return Err(Error::InvalidInput(format!(
            "label lengths differ: {} vs {}",
            pred.len(),
            truth.len()
        )));
    }
    if pred.is_empty() {
        return Err(Error::InvalidInput("labelings must be non-empty".into()));
    }
    let n = pred.len() as f64;

    let mut joint: HashMap<(usize, usize), usize> = HashMap::new();
    let mut class_counts: HashMap<usize, usize> = HashMap::new();
    let mut cluster_counts: HashMap<usize, usize> = HashMap::new();
    for (&k, &c) in pred.iter().zip(truth.iter()) {
        *joint.entry((c, k)).or_insert(0) += 1;
        *class_counts.entry(c).or_insert(0) += 1;
        *cluster_counts.entry(k).or_insert(0) += 1;
    }

    let h_c = entropy_of_counts(class_counts.values().copied(), n);
    let h_k = entropy_of_counts(cluster_counts.values().copied(), n);
    // H(C|K) = -sum p(c,k) ln( p(c,k) / p(k) )
    let mut h_c_given_k = 0.0;
    let mut h_k_given_c = 0.0;
    for (&(c, k), &cnt) in &joint {
        let p = cnt as f64 / n;
        h_c_given_k -= p * (cnt as f64 / cluster_counts[&k] as f64).ln();
        h_k_given_c -= p * (cnt as f64 / class_counts[&c] as f64).ln();
    }

    let h = if h_c > 0.0 { 1.0 - h_c_given_k / h_c } else { 1.0 };
    let c = if h_k > 0.0 { 1.0 - h_k_given_c / h_k } else { 1.0 };
    Ok(if h + c == 0.0 { 0.0 } else { 2.0 * h * c / (h + c) })
}

#[derive(Debug, Clone, PartialEq)]
pub struct CalibrationBin {
    pub count: usize,
    pub accuracy: f64,
    pub confidence: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CalibrationReport {
    pub n_bins: usize,
    /// One entry per bin `((m-1)/M, m/M]`, m = 1..=M.
    pub bins: Vec<CalibrationBin>,
    pub ece: f64,
}

/// Expected calibration error with `n_bins` equal-width confidence bins.
///
/// Confidence is the maximum class probability of each row, the prediction
/// its argmax; the ECE is the count-weighted mean absolute gap between
/// per-bin accuracy and confidence.
pub fn ece(prob: &Array2<f64>, labels: &[usize], n_bins: usize) -> Result<CalibrationReport> {
    let n = prob.nrows();
    if n_bins == 0 {
        return Err(Error::InvalidParameter("need at least 1 bin".into()));
    }
    if labels.len() != n || n == 0 {
        return Err(Error::InvalidInput(format!(
            "{} probability rows vs {} labels",
            n,
            labels.len()
        )));
    }
    for (i, row) in prob.rows().into_iter().enumerate() {
        let sum: f64 = row.sum();
        if (sum - 1.0).abs() > 1e-6 || row.iter().any(|&p| !(-1e-9..=1.0 + 1e-9).contains(&p)) {
            return Err(Error::InvalidInput(format!(
                "probability row {i} is not normalized (sum {sum})"
            )));
        }
    }
    if labels.iter().any(|&y| y >= prob.ncols()) {
        return Err(Error::InvalidInput("label outside probability columns".into()));
    }

    let mut counts = vec![0usize; n_bins];
    let mut correct = vec![0usize; n_bins];
    let mut conf_sum = vec![0.0f64; n_bins];
    for (row, &y) in prob.rows().into_iter().zip(labels.iter()) {
        let (pred, conf) = row
            .iter()
            .enumerate()
            .fold((0usize, f64::MIN), |acc, (j, &p)| {
                if p > acc.1 {
                    (j, p)
                } else {
                    acc
                }
            });
        // bins are left-open: p falls in ((m-1)/M, m/M]
        let m = ((conf * n_bins as f64).ceil() as usize).clamp(1, n_bins);
        counts[m - 1] += 1;
        conf_sum[m - 1] += conf;
        if pred == y {
            correct[m - 1] += 1;
        }
    }

    let mut bins = Vec::with_capacity(n_bins);
    let mut total = 0.0;
    for m in 0..n_bins {
        let (acc, conf) = if counts[m] > 0 {
            (
                correct[m] as f64 / counts[m] as f64,
                conf_sum[m] / counts[m] as f64,
            )
        } else {
            (0.0, 0.0)
        };
        total += counts[m] as f64 / n as f64 * (acc - conf).abs();
        bins.push(CalibrationBin {
            count: counts[m],
            accuracy: acc,
            confidence: conf,
        });
    }
    Ok(CalibrationReport {
        n_bins,
        bins,
        ece: total,
    })
}

fn binary_auc(scores: &[f64], positive: &[bool]) -> f64 {
    let n = scores.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| scores[a].total_cmp(&scores[b]));

    // midranks over tie groups
    let mut rank_sum_pos = 0.0;
    let mut i = 0;
    while i < n {
        let mut j = i;
        while j + 1 < n && scores[order[j + 1]] == scores[order[i]] {
            j += 1;
        }
        let midrank = (i + 1 + j + 1) as f64 / 2.0;
        for &idx in &order[i..=j] {
            if positive[idx] {
                rank_sum_pos += midrank;
            }
        }
        i = j + 1;
    }
    let n_pos = positive.iter().filter(|&&p| p).count() as f64;
    let n_neg = n as f64 - n_pos;
    let u = rank_sum_pos - n_pos * (n_pos + 1.0) / 2.0;
    u / (n_pos * n_neg)
}

/// One-vs-rest AUC per class via the rank statistic (ties count half),
/// averaged unweighted over classes.
pub fn macro_auc(prob: &Array2<f64>, labels: &[usize]) -> Result<f64> {
    let n_classes = prob.ncols();
    if n_classes < 2 {
        return Err(Error::InvalidInput(
            "macro AUC needs at least 2 classes".into(),
        ));
    }
    if labels.len() != prob.nrows() || labels.is_empty() {
        return Err(Error::InvalidInput(format!(
            "{} probability rows vs {} labels",
            prob.nrows(),
            labels.len()
        )));
    }
    for class in 0..n_classes {
        if !labels.contains(&class) {
            return Err(Error::MetricUndefined(format!(
                "class {class} is absent from the labels"
            )));
        }
    }

    let mut total = 0.0;
    for class in 0..n_classes {
        let scores: Vec<f64> = prob.column(class).to_vec();
        let positive: Vec<bool> = labels.iter().map(|&y| y == class).collect();
        total += binary_auc(&scores, &positive);
    }
    Ok(total / n_classes as f64)
}
