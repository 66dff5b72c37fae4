//! Lloyd's algorithm with k-means++ seeding and multiple restarts.

use ndarray::Array2;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct KmeansResult {
    pub labels: Vec<usize>,
    pub centers: Array2<f64>,
    /// Sum of squared distances to the assigned centers.
    pub inertia: f64,
}

fn dist2(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b.iter())
        .map(|(x, y)| (x - y) * (x - y))
        .sum()
}

fn kmeanspp(x: &Array2<f64>, k: usize, rng: &mut ChaCha8Rng) -> Array2<f64> {
    let n = x.nrows();
    let f = x.ncols();
    let mut centers = Array2::zeros((k, f));
    let first = rng.random_range(0..n);
    centers.row_mut(0).assign(&x.row(first));

    let mut d2: Vec<f64> = (0..n)
        .map(|i| dist2(x.row(i).as_slice().unwrap(), centers.row(0).as_slice().unwrap()))
        .collect();
    for c in 1..k {
        let total: f64 = d2.iter().sum();
        let idx = if total > 0.0 {
            let mut target = rng.random::<f64>() * total;
            let mut pick = n - 1;
            for (i, &w) in d2.iter().enumerate() {
                target -= w;
                if target <= 0.0 {
                    pick = i;
                    break;
                }
            }
            pick
        } else {
            rng.random_range(0..n)
        };
        centers.row_mut(c).assign(&x.row(idx));
        for i in 0..n {
            let d = dist2(x.row(i).as_slice().unwrap(), centers.row(c).as_slice().unwrap());
            if d < d2[i] {
                d2[i] = d;
            }
        }
    }
    centers
}

fn assign(x: &Array2<f64>, centers: &Array2<f64>, labels: &mut [usize]) -> f64 {
    let mut inertia = 0.0;
    for (i, mut_label) in labels.iter_mut().enumerate() {
        let point = x.row(i);
        let mut best = 0usize;
        let mut best_d = f64::INFINITY;
        for (c, center) in centers.rows().into_iter().enumerate() {
            let d = dist2(point.as_slice().unwrap(), center.as_slice().unwrap());
            if d < best_d {
                best_d = d;
                best = c;
            }
        }
        *mut_label = best;
        inertia += best_d;
    }
    inertia
}

fn lloyd(x: &Array2<f64>, k: usize, seed: u64, max_iter: usize, tol: f64) -> KmeansResult {
    let n = x.nrows();
    let f = x.ncols();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut centers = kmeanspp(x, k, &mut rng);
    let mut labels = vec![0usize; n];
    let mut prev_labels = vec![usize::MAX; n];
    let mut prev_inertia = f64::INFINITY;

    for _ in 0..max_iter {
        let inertia = assign(x, &centers, &mut labels);
        // Lloyd iterations never increase the objective
        assert!(
            inertia <= prev_inertia * (1.0 + 1e-12) + 1e-12,
            "inertia increased: {prev_inertia} -> {inertia}"
        );
        let converged = labels == prev_labels || prev_inertia - inertia <= tol;
        prev_labels.copy_from_slice(&labels);
        prev_inertia = inertia;
        if converged {
            break;
        }

        let mut counts = vec![0usize; k];
        let mut sums = Array2::<f64>::zeros((k, f));
        for (i, &l) in labels.iter().enumerate() {
            counts[l] += 1;
            let mut row = sums.row_mut(l);
            row += &x.row(i);
        }
        // empty clusters re-seed from the point farthest from its center
        let mut taken: Vec<usize> = Vec::new();
        for c in 0..k {
            if counts[c] == 0 {
                let far = (0..n)
                    .filter(|i| !taken.contains(i))
                    .max_by(|&a, &b| {
                        let da = dist2(
                            x.row(a).as_slice().unwrap(),
                            centers.row(labels[a]).as_slice().unwrap(),
                        );
                        let db = dist2(
                            x.row(b).as_slice().unwrap(),
                            centers.row(labels[b]).as_slice().unwrap(),
                        );
                        da.total_cmp(&db)
                    })
                    .unwrap();
                taken.push(far);
                centers.row_mut(c).assign(&x.row(far));
            } else {
                for j in 0..f {
                    centers[[c, j]] = sums[[c, j]] / counts[c] as f64;
                }
            }
        }
    }

    let inertia = assign(x, &centers, &mut labels);
    KmeansResult {
        labels,
        centers,
        inertia,
    }
}

/// k-means with the defaults: 10 restarts, 300 iterations, tolerance 1e-6.
pub fn kmeans(x: &Array2<f64>, k: usize, seed: u64) -> Result<KmeansResult> {
    kmeans_with(x, k, seed, 10, 300, 1e-6)
}

/// k-means returning the best of `n_init` seeded restarts by inertia.
///
/// Restart seeds are pre-split from the master seed, so restarts could run
/// concurrently and still reproduce the sequential result.
pub fn kmeans_with(
    x: &Array2<f64>,
    k: usize,
    seed: u64,
    n_init: usize,
    max_iter: usize,
    tol: f64,
) -> Result<KmeansResult> {
    let n = x.nrows();
    if k == 0 || k > n {
        return Err(Error::InvalidParameter(format!(
            "k = {k} outside 1..={n}"
        )));
    }
    if n_init == 0 || max_iter == 0 {
        return Err(Error::InvalidParameter(
            "n_init and max_iter must be >= 1".into(),
        ));
    }
    if x.iter().any(|v| !v.is_finite()) {
        return Err(Error::InvalidInput("data contains non-finite values".into()));
    }
    let mut master = ChaCha8Rng::seed_from_u64(seed);
    let seeds: Vec<u64> = (0..n_init).map(|_| master.random()).collect();
    let mut best: Option<KmeansResult> = None;
    for s in seeds {
        let res = lloyd(x, k, s, max_iter, tol);
        if best.as_ref().map(|b| res.inertia < b.inertia).unwrap_or(true) {
            best = Some(res);
        }
    }
    Ok(best.unwrap())
}
