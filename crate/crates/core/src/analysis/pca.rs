//! Principal component analysis with a deterministic sign convention, plus
//! the interval-restricted variant keyed to the beat template.

use ndarray::{Array1, Array2};

use crate::align::{hrc_segment_bounds, HrcCoefficients, Template, DEFAULT_MEDIAN_R_FRAC};
use crate::error::{Error, Result};

/// Fitted principal components.
///
/// `components` has one orthonormal row per component, ordered by
/// descending explained variance (sample covariance, divisor `n - 1`).
#[derive(Debug, Clone, PartialEq)]
pub struct PcaResult {
    pub components: Array2<f64>,
    pub explained_variance: Vec<f64>,
    pub means: Vec<f64>,
}

/// Cyclic Jacobi eigendecomposition of a symmetric matrix.
/// Returns eigenvalues and matching eigenvectors (columns), unsorted.
fn symmetric_eigen(a: &Array2<f64>) -> (Vec<f64>, Array2<f64>) {
    let n = a.nrows();
    let mut m = a.clone();
    let mut v = Array2::<f64>::eye(n);
    let scale: f64 = a.iter().map(|x| x * x).sum::<f64>().sqrt().max(1.0);

    for _sweep in 0..100 {
        let mut off = 0.0;
        for p in 0..n {
            for q in p + 1..n {
                off += m[[p, q]] * m[[p, q]];
            }
        }
        if off.sqrt() < 1e-14 * scale {
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                let apq = m[[p, q]];
                if apq.abs() < 1e-300 {
                    continue;
                }
                let theta = (m[[q, q]] - m[[p, p]]) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for i in 0..n {
                    let (mip, miq) = (m[[i, p]], m[[i, q]]);
                    m[[i, p]] = c * mip - s * miq;
                    m[[i, q]] = s * mip + c * miq;
                }
                for i in 0..n {
                    let (mpi, mqi) = (m[[p, i]], m[[q, i]]);
                    m[[p, i]] = c * mpi - s * mqi;
                    m[[q, i]] = s * mpi + c * mqi;
                }
                for i in 0..n {
                    let (vip, viq) = (v[[i, p]], v[[i, q]]);
                    v[[i, p]] = c * vip - s * viq;
                    v[[i, q]] = s * vip + c * viq;
                }
            }
        }
    }
    ((0..n).map(|i| m[[i, i]]).collect(), v)
}

fn fix_sign(row: &mut [f64]) {
    let mut best = 0;
    for (i, v) in row.iter().enumerate() {
        if v.abs() > row[best].abs() {
            best = i;
        }
    }
    if row[best] < 0.0 {
        for v in row.iter_mut() {
            *v = -*v;
        }
    }
}

/// Fit the top-`k` principal components of `x` (`[n_samples x n_features]`).
///
/// Eigenvectors come from the centered covariance; when there are more
/// features than samples the Gram matrix route is used instead, which gives
/// the same components. Each component's largest-magnitude entry is made
/// positive.
pub fn pca_fit(x: &Array2<f64>, k: usize) -> Result<PcaResult> {
    let (n, f) = (x.nrows(), x.ncols());
    if n < 2 {
        return Err(Error::InvalidInput("pca needs at least 2 samples".into()));
    }
    if k == 0 || k > n.min(f) {
        return Err(Error::InvalidParameter(format!(
            "k = {k} outside 1..=min(n_samples, n_features) = {}",
            n.min(f)
        )));
    }

    let means: Vec<f64> = (0..f).map(|j| x.column(j).sum() / n as f64).collect();
    let mut xc = x.clone();
    for (j, &mu) in means.iter().enumerate() {
        xc.column_mut(j).mapv_inplace(|v| v - mu);
    }
    let denom = (n - 1) as f64;

    let (mut eigvals, eigvecs_cols, from_gram) = if f <= n {
        let cov = xc.t().dot(&xc) / denom;
        let (vals, vecs) = symmetric_eigen(&cov);
        (vals, vecs, false)
    } else {
        let gram = xc.dot(&xc.t()) / denom;
        let (vals, vecs) = symmetric_eigen(&gram);
        (vals, vecs, true)
    };

    // order by descending eigenvalue, stable in the original index
    let mut order: Vec<usize> = (0..eigvals.len()).collect();
    order.sort_by(|&a, &b| eigvals[b].partial_cmp(&eigvals[a]).unwrap().then(a.cmp(&b)));

    let mut components = Array2::zeros((k, f));
    let mut explained = Vec::with_capacity(k);
    let mut fallback_axis = 0usize;
    for (row, &idx) in order.iter().take(k).enumerate() {
        let lambda = eigvals[idx].max(0.0);
        explained.push(lambda);
        eigvals[idx] = lambda;
        if from_gram {
            // map a Gram eigenvector u to feature space: v = Xc^T u / |Xc^T u|
            let u = eigvecs_cols.column(idx);
            let mut v = Array1::<f64>::zeros(f);
            for i in 0..n {
                let ui = u[i];
                for j in 0..f {
                    v[j] += xc[[i, j]] * ui;
                }
            }
            let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
            if norm > 1e-12 {
                for j in 0..f {
                    components[[row, j]] = v[j] / norm;
                }
            } else {
                // zero-variance direction: any unit vector works, scores are 0
                components[[row, fallback_axis.min(f - 1)]] = 1.0;
                fallback_axis += 1;
            }
        } else {
            for j in 0..f {
                components[[row, j]] = eigvecs_cols[[j, idx]];
            }
        }
    }
    for mut row in components.rows_mut() {
        fix_sign(row.as_slice_mut().unwrap());
    }

    Ok(PcaResult {
        components,
        explained_variance: explained,
        means,
    })
}

/// Project rows of `x` onto the fitted components.
pub fn pca_transform(res: &PcaResult, x: &Array2<f64>) -> Result<Array2<f64>> {
    if x.ncols() != res.means.len() {
        return Err(Error::InvalidInput(format!(
            "{} features, model has {}",
            x.ncols(),
            res.means.len()
        )));
    }
    let mut xc = x.clone();
    for (j, &mu) in res.means.iter().enumerate() {
        xc.column_mut(j).mapv_inplace(|v| v - mu);
    }
    Ok(xc.dot(&res.components.t()))
}

/// Map scores back to feature space.
pub fn pca_inverse_transform(res: &PcaResult, scores: &Array2<f64>) -> Result<Array2<f64>> {
    if scores.ncols() != res.components.nrows() {
        return Err(Error::InvalidInput(format!(
            "{} score columns, model has {} components",
            scores.ncols(),
            res.components.nrows()
        )));
    }
    let mut out = scores.dot(&res.components);
    for (j, &mu) in res.means.iter().enumerate() {
        out.column_mut(j).mapv_inplace(|v| v + mu);
    }
    Ok(out)
}

/// Beat compartment selected by `interval_pca`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Wave {
    Qrs,
    T,
}

/// QRS half-width used for the interval windows, seconds.
const QRS_HALF_WIDTH_S: f64 = 0.06;

/// Column ranges (within one beat) of the two wave windows.
///
/// The QRS window is the R column plus/minus the QRS half-width; the T
/// window starts just after it and ends at the T-offset predicted by the
/// heart-rate model at the template rate, clipped to the beat when the
/// predicted offset runs past the median-beat window.
pub fn wave_columns(template: &Template, wave: Wave) -> Result<(usize, usize)> {
    let rr = template.rr_samples;
    let r_col = (DEFAULT_MEDIAN_R_FRAC * rr as f64).round() as usize;
    let qw = (QRS_HALF_WIDTH_S * template.fs).round() as usize;
    let (start, end) = match wave {
        Wave::Qrs => (r_col.saturating_sub(qw), r_col + qw + 1),
        Wave::T => {
            let (_, t_len) =
                hrc_segment_bounds(template.target_bpm, rr, &HrcCoefficients::default())?;
            (r_col + qw + 1, (r_col + t_len + 1).min(rr))
        }
    };
    if start >= end || end > rr {
        return Err(Error::InvalidParameter(format!(
            "{wave:?} window [{start}, {end}) is empty or exceeds the {rr}-sample beat"
        )));
    }
    Ok((start, end))
}

/// One-dimensional PCA restricted to a wave window of a median-beat matrix.
///
/// `x` holds one median beat per row, all leads concatenated
/// (`n_leads * rr_samples` columns, lead-major). Returns the fitted
/// component together with the absolute column indices it was fitted on.
pub fn interval_pca(
    x: &Array2<f64>,
    template: &Template,
    wave: Wave,
) -> Result<(PcaResult, Vec<usize>)> {
    let rr = template.rr_samples;
    if x.ncols() == 0 || x.ncols() % rr != 0 {
        return Err(Error::InvalidParameter(format!(
            "{} columns is not a whole number of {rr}-sample beats",
            x.ncols()
        )));
    }
    let n_leads = x.ncols() / rr;
    let (start, end) = wave_columns(template, wave)?;
    let columns: Vec<usize> = (0..n_leads)
        .flat_map(|l| l * rr + start..l * rr + end)
        .collect();

    let mut sub = Array2::zeros((x.nrows(), columns.len()));
    for (cj, &c) in columns.iter().enumerate() {
        sub.column_mut(cj).assign(&x.column(c));
    }
    let res = pca_fit(&sub, 1)?;
    Ok((res, columns))
}
