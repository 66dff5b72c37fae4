//! Agglomerative clustering minimizing the Ward variance increase, via the
//! Lance-Williams recurrence on squared Euclidean distances.

use ndarray::Array2;

use crate::error::{Error, Result};

/// One merge step. Clusters are identified by their slot, the smallest
/// original row index among their members.
#[derive(Debug, Clone, PartialEq)]
pub struct WardMerge {
    pub cluster_a: usize,
    pub cluster_b: usize,
    /// Increase of the total within-cluster variance caused by the merge.
    pub cost: f64,
    pub merged_size: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct WardResult {
    /// Cluster ids in `[0, k)`, numbered by ascending slot index.
    pub labels: Vec<usize>,
    /// Merge history, in order, down to `k` clusters.
    pub merges: Vec<WardMerge>,
}

/// Cut the Ward dendrogram of `x` at `k` clusters.
///
/// The pairwise state is maintained with the Lance-Williams update; the
/// stored quantity is twice the Ward variance increase, so selecting its
/// minimum selects the Ward-optimal merge. Ties break on the smallest pair
/// of slot indices.
pub fn ward_cluster(x: &Array2<f64>, k: usize) -> Result<WardResult> {
    let n = x.nrows();
    if k == 0 || k > n {
        return Err(Error::InvalidParameter(format!(
            "k = {k} outside 1..={n}"
        )));
    }
    if x.iter().any(|v| !v.is_finite()) {
        return Err(Error::InvalidInput("data contains non-finite values".into()));
    }

    // squared Euclidean distances; for singletons this is twice the Ward cost
    let mut d = vec![vec![0.0f64; n]; n];
    for i in 0..n {
        for j in i + 1..n {
            let v: f64 = x
                .row(i)
                .iter()
                .zip(x.row(j).iter())
                .map(|(a, b)| (a - b) * (a - b))
                .sum();
            d[i][j] = v;
            d[j][i] = v;
        }
    }

    let mut active: Vec<usize> = (0..n).collect();
    let mut size = vec![1usize; n];
    let mut assignment: Vec<usize> = (0..n).collect();
    let mut merges = Vec::with_capacity(n - k);

    while active.len() > k {
        let mut best: Option<(f64, usize, usize)> = None;
        for (ai, &a) in active.iter().enumerate() {
            for &b in &active[ai + 1..] {
                let cand = (d[a][b], a, b);
                if best
                    .map(|(bd, ba, bb)| {
                        cand.0 < bd || (cand.0 == bd && (a, b) < (ba, bb))
                    })
                    .unwrap_or(true)
                {
                    best = Some(cand);
                }
            }
        }
        let (dist, a, b) = best.unwrap();

        // Lance-Williams update for the Ward criterion
        let (na, nb) = (size[a] as f64, size[b] as f64);
        for &c in active.iter().filter(|&&c| c != a && c != b) {
            let nc = size[c] as f64;
            let upd = ((na + nc) * d[a][c] + (nb + nc) * d[b][c] - nc * dist)
                / (na + nb + nc);
            d[a][c] = upd;
            d[c][a] = upd;
        }
        size[a] += size[b];
        active.retain(|&s| s != b);
        for slot in assignment.iter_mut() {
            if *slot == b {
                *slot = a;
            }
        }
        merges.push(WardMerge {
            cluster_a: a,
            cluster_b: b,
            cost: dist / 2.0,
            merged_size: size[a],
        });
    }

    // label by ascending slot so ids are deterministic
    let labels = assignment
        .iter()
        .map(|slot| active.iter().position(|s| s == slot).unwrap())
        .collect();
    Ok(WardResult { labels, merges })
}
