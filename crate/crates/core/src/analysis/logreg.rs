//! Multinomial logistic regression trained by full-batch gradient descent
//! with a backtracking line search.

use ndarray::Array2;

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct LogisticRegression {
    /// `[n_classes x n_features]`.
    pub weights: Array2<f64>,
    pub bias: Vec<f64>,
}

fn softmax_rows(logits: &mut Array2<f64>) {
    for mut row in logits.rows_mut() {
        let max = row.iter().cloned().fold(f64::MIN, f64::max);
        let mut sum = 0.0;
        for v in row.iter_mut() {
            *v = (*v - max).exp();
            sum += *v;
        }
        for v in row.iter_mut() {
            *v /= sum;
        }
    }
}

fn probabilities(x: &Array2<f64>, weights: &Array2<f64>, bias: &[f64]) -> Array2<f64> {
    let mut logits = x.dot(&weights.t());
    for mut row in logits.rows_mut() {
        for (v, b) in row.iter_mut().zip(bias.iter()) {
            *v += b;
        }
    }
    softmax_rows(&mut logits);
    logits
}

/// L2-regularized negative log-likelihood and its gradient at the given
/// parameters. The bias is not penalized.
pub fn logreg_loss_and_grad(
    x: &Array2<f64>,
    y: &[usize],
    n_classes: usize,
    weights: &Array2<f64>,
    bias: &[f64],
    l2: f64,
) -> (f64, Array2<f64>, Vec<f64>) {
    let n = x.nrows();
    let prob = probabilities(x, weights, bias);

    let mut loss = 0.0;
    for (i, &yi) in y.iter().enumerate() {
        loss -= prob[[i, yi]].max(1e-300).ln();
    }
    loss /= n as f64;
    loss += 0.5 * l2 * weights.iter().map(|w| w * w).sum::<f64>();

    // dL/dZ = (P - Y) / n
    let mut dz = prob;
    for (i, &yi) in y.iter().enumerate() {
        dz[[i, yi]] -= 1.0;
    }
    dz /= n as f64;

    let mut grad_w = dz.t().dot(x);
    grad_w.scaled_add(l2, weights);
    let grad_b: Vec<f64> = (0..n_classes).map(|c| dz.column(c).sum()).collect();
    (loss, grad_w, grad_b)
}

/// Fit by gradient descent with an Armijo backtracking line search;
/// converged when the gradient norm falls below `tol`.
pub fn logreg_fit(
    x: &Array2<f64>,
    y: &[usize],
    l2: f64,
    max_iter: usize,
    tol: f64,
) -> Result<LogisticRegression> {
    let n = x.nrows();
    if n < 2 {
        return Err(Error::InvalidInput("need at least 2 samples".into()));
    }
    if y.len() != n {
        return Err(Error::InvalidInput(format!(
            "{} labels for {n} rows",
            y.len()
        )));
    }
    if x.iter().any(|v| !v.is_finite()) {
        return Err(Error::InvalidInput("features contain non-finite values".into()));
    }
    if l2 < 0.0 {
        return Err(Error::InvalidParameter("l2 must be >= 0".into()));
    }
    let n_classes = (y.iter().max().copied().unwrap_or(0) + 1).max(2);
    let f = x.ncols();

    let mut weights = Array2::zeros((n_classes, f));
    let mut bias = vec![0.0; n_classes];
    let mut step = 1.0f64;

    for _ in 0..max_iter {
        let (loss, grad_w, grad_b) = logreg_loss_and_grad(x, y, n_classes, &weights, &bias, l2);
        let grad_norm2 = grad_w.iter().map(|g| g * g).sum::<f64>()
            + grad_b.iter().map(|g| g * g).sum::<f64>();
        if grad_norm2.sqrt() < tol {
            break;
        }

        // backtracking: accept the first step satisfying the Armijo condition
        let mut t = step * 2.0;
        let mut accepted = false;
        for _ in 0..60 {
            let cand_w = &weights - &(t * &grad_w);
            let cand_b: Vec<f64> = bias
                .iter()
                .zip(grad_b.iter())
                .map(|(b, g)| b - t * g)
                .collect();
            let (cand_loss, _, _) =
                logreg_loss_and_grad(x, y, n_classes, &cand_w, &cand_b, l2);
            if cand_loss <= loss - 1e-4 * t * grad_norm2 {
                weights = cand_w;
                bias = cand_b;
                step = t;
                accepted = true;
                break;
            }
            t *= 0.5;
        }
        if !accepted {
            break; // no descent step available at any tried scale
        }
    }

    Ok(LogisticRegression { weights, bias })
}

/// Row-normalized class probabilities for the given features.
pub fn logreg_predict_proba(
    model: &LogisticRegression,
    x: &Array2<f64>,
) -> Result<Array2<f64>> {
    if x.ncols() != model.weights.ncols() {
        return Err(Error::InvalidInput(format!(
            "{} features, model has {}",
            x.ncols(),
            model.weights.ncols()
        )));
    }
    if x.iter().any(|v| !v.is_finite()) {
        return Err(Error::InvalidInput("features contain non-finite values".into()));
    }
    Ok(probabilities(x, &model.weights, &model.bias))
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use rand_distr::StandardNormal;

    #[test]
    fn separable_one_dimensional_data() {
        let x = array![[-2.0], [-1.5], [-1.0], [1.0], [1.5], [2.0]];
        let y = [0, 0, 0, 1, 1, 1];
        let model = logreg_fit(&x, &y, 1e-4, 500, 1e-6).unwrap();
        let prob = logreg_predict_proba(&model, &x).unwrap();
        for (i, &yi) in y.iter().enumerate() {
            let pred = if prob[[i, 1]] > prob[[i, 0]] { 1 } else { 0 };
            assert_eq!(pred, yi, "row {i}");
        }
    }

    #[test]
    fn gradient_matches_finite_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let x = Array2::from_shape_fn((7, 3), |_| rng.sample::<f64, _>(StandardNormal));
        let y = [0usize, 1, 2, 0, 1, 2, 1];
        let weights = Array2::from_shape_fn((3, 3), |_| rng.sample::<f64, _>(StandardNormal));
        let bias: Vec<f64> = (0..3).map(|_| rng.sample::<f64, _>(StandardNormal)).collect();
        let l2 = 0.05;
        let (_, grad_w, grad_b) = logreg_loss_and_grad(&x, &y, 3, &weights, &bias, l2);

        let h = 1e-6;
        for c in 0..3 {
            for j in 0..3 {
                let mut wp = weights.clone();
                wp[[c, j]] += h;
                let mut wm = weights.clone();
                wm[[c, j]] -= h;
                let (lp, _, _) = logreg_loss_and_grad(&x, &y, 3, &wp, &bias, l2);
                let (lm, _, _) = logreg_loss_and_grad(&x, &y, 3, &wm, &bias, l2);
                let fd = (lp - lm) / (2.0 * h);
                let rel = (grad_w[[c, j]] - fd).abs() / fd.abs().max(1e-8);
                assert!(rel < 1e-5, "w[{c},{j}]: analytic {} fd {fd}", grad_w[[c, j]]);
            }
            let mut bp = bias.clone();
            bp[c] += h;
            let mut bm = bias.clone();
            bm[c] -= h;
            let (lp, _, _) = logreg_loss_and_grad(&x, &y, 3, &weights, &bp, l2);
            let (lm, _, _) = logreg_loss_and_grad(&x, &y, 3, &weights, &bm, l2);
            let fd = (lp - lm) / (2.0 * h);
            let rel = (grad_b[c] - fd).abs() / fd.abs().max(1e-8);
            assert!(rel < 1e-5, "b[{c}]: analytic {} fd {fd}", grad_b[c]);
        }
    }

    #[test]
    fn single_class_data_predicts_that_class() {
        let x = array![[0.3], [0.1], [-0.2], [0.5]];
        let y = [0, 0, 0, 0];
        let model = logreg_fit(&x, &y, 1e-6, 2000, 1e-5).unwrap();
        let prob = logreg_predict_proba(&model, &x).unwrap();
        for i in 0..4 {
            assert!(prob[[i, 0]] > 0.99, "p(class 0) = {}", prob[[i, 0]]);
        }
    }

    #[test]
    fn training_loss_is_non_increasing() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let x = Array2::from_shape_fn((40, 4), |_| rng.sample::<f64, _>(StandardNormal));
        let y: Vec<usize> = (0..40).map(|i| i % 3).collect();
        // re-run the descent loop manually, tracking the accepted losses
        let mut weights = Array2::zeros((3, 4));
        let mut bias = vec![0.0; 3];
        let mut last = f64::INFINITY;
        for _ in 0..50 {
            let (loss, grad_w, grad_b) = logreg_loss_and_grad(&x, &y, 3, &weights, &bias, 0.01);
            assert!(loss <= last + 1e-12, "loss rose: {last} -> {loss}");
            last = loss;
            let g2 = grad_w.iter().map(|g| g * g).sum::<f64>()
                + grad_b.iter().map(|g| g * g).sum::<f64>();
            let mut t = 1.0;
            loop {
                let cand_w = &weights - &(t * &grad_w);
                let cand_b: Vec<f64> = bias
                    .iter()
                    .zip(grad_b.iter())
                    .map(|(b, g)| b - t * g)
                    .collect();
                let (cl, _, _) = logreg_loss_and_grad(&x, &y, 3, &cand_w, &cand_b, 0.01);
                if cl <= loss - 1e-4 * t * g2 {
                    weights = cand_w;
                    bias = cand_b;
                    break;
                }
                t *= 0.5;
                assert!(t > 1e-20);
            }
        }
    }

    #[test]
    fn rejects_non_finite_features() {
        let x = array![[1.0], [f64::NAN]];
        assert!(logreg_fit(&x, &[0, 1], 0.0, 10, 1e-4).is_err());
    }
}
