//! Evaluation metrics: coefficient mean squared error, per-predictor false
//! positive / false negative rates over the regularized differences, ROC-AUC
//! and the cumulative capture-rate (Lorenz) area.

use ndarray::ArrayView1;

use crate::error::{Error, Result};
use crate::model::ModelSpec;

/// Mean squared error between two coefficient vectors of equal length.
pub fn coefficient_mse(beta_hat: ArrayView1<f64>, beta_true: ArrayView1<f64>) -> Result<f64> {
    if beta_hat.len() != beta_true.len() {
        return Err(Error::ShapeMismatch(format!(
            "coefficient vectors of length {} and {}",
            beta_hat.len(),
            beta_true.len()
        )));
    }
    let n = beta_hat.len() as f64;
    Ok(beta_hat.iter().zip(&beta_true).map(|(a, b)| (a - b) * (a - b)).sum::<f64>() / n)
}

/// False positive and false negative rates of one predictor.
#[derive(Debug, Clone)]
pub struct PredictorRates {
    pub predictor: String,
    pub fpr: f64,
    pub fnr: f64,
}

/// Selection/fusion error rates per predictor.
///
/// For fused blocks the counted events are the regularized differences of
/// the fusion graph (the reference level participates at value 0): a false
/// positive is a truly zero difference estimated nonzero, a false negative
/// a truly nonzero difference estimated zero. For Lasso and Group Lasso
/// blocks the coefficients themselves are counted. A rate with an empty
/// denominator is 0.
pub fn fpr_fnr(
    spec: &ModelSpec,
    beta_hat: &ndarray::Array1<f64>,
    beta_true: &ndarray::Array1<f64>,
    tolerance: f64,
) -> Vec<PredictorRates> {
    const TRUE_ZERO: f64 = 1e-12;
    let mut out = Vec::new();
    for block in spec.blocks() {
        if block.is_intercept() {
            continue;
        }
        let (mut fp, mut fneg, mut true_zero, mut true_nonzero) = (0usize, 0usize, 0usize, 0usize);
        let mut count = |t: f64, e: f64| {
            let truly_zero = t.abs() <= TRUE_ZERO;
            let est_zero = e.abs() <= tolerance;
            if truly_zero {
                true_zero += 1;
                if !est_zero {
                    fp += 1;
                }
            } else {
                true_nonzero += 1;
                if est_zero {
                    fneg += 1;
                }
            }
        };
        if block.penalty.is_fused() {
            let graph = block.graph.as_ref().expect("fused block has a graph");
            let vt = spec.level_values(block, beta_true);
            let vh = spec.level_values(block, beta_hat);
            for &(i, l) in graph.edges() {
                count(vt[i] - vt[l], vh[i] - vh[l]);
            }
        } else {
            let bt = spec.block_coefficients(block, beta_true);
            let bh = spec.block_coefficients(block, beta_hat);
            for (t, e) in bt.iter().zip(bh.iter()) {
                count(*t, *e);
            }
        }
        let fpr = if true_zero > 0 { fp as f64 / true_zero as f64 } else { 0.0 };
        let fnr = if true_nonzero > 0 { fneg as f64 / true_nonzero as f64 } else { 0.0 };
        out.push(PredictorRates { predictor: block.name.clone(), fpr, fnr });
    }
    out
}

/// Mann-Whitney AUC with tie correction (average ranks).
pub fn roc_auc(scores: &[f64], labels: &[bool]) -> Result<f64> {
    if scores.len() != labels.len() {
        return Err(Error::ShapeMismatch(format!(
            "{} scores for {} labels",
            scores.len(),
            labels.len()
        )));
    }
    let n_pos = labels.iter().filter(|&&l| l).count();
    let n_neg = labels.len() - n_pos;
    if n_pos == 0 || n_neg == 0 {
        return Err(Error::InvalidArgument(
            "AUC needs both positive and negative labels".into(),
        ));
    }
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[a].partial_cmp(&scores[b]).unwrap());

    // average ranks over ties, 1-based
    let mut rank_sum_pos = 0.0;
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && scores[order[j + 1]] == scores[order[i]] {
            j += 1;
        }
        let avg_rank = (i + j + 2) as f64 / 2.0;
        for &idx in &order[i..=j] {
            if labels[idx] {
                rank_sum_pos += avg_rank;
            }
        }
        i = j + 1;
    }
    let u = rank_sum_pos - (n_pos * (n_pos + 1)) as f64 / 2.0;
    Ok(u / (n_pos as f64 * n_neg as f64))
}

/// Area under the cumulative capture-rate curve: observations sorted by
/// decreasing prediction (stable, so ties keep their input order), the curve
/// plots the population proportion against the captured share of the
/// observed counts, and the area is the trapezoidal integral from (0, 0).
pub fn lorenz_aucc(predictions: &[f64], observed: &[f64]) -> Result<f64> {
    if predictions.len() != observed.len() {
        return Err(Error::ShapeMismatch(format!(
            "{} predictions for {} observations",
            predictions.len(),
            observed.len()
        )));
    }
    if observed.iter().any(|&v| v < 0.0) {
        return Err(Error::InvalidArgument("observed counts must be nonnegative".into()));
    }
    let total: f64 = observed.iter().sum();
    if total <= 0.0 {
        return Err(Error::InvalidArgument("observed counts are all zero".into()));
    }
    let n = predictions.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| predictions[b].partial_cmp(&predictions[a]).unwrap());

    let mut area = 0.0;
    let mut cum = 0.0;
    let mut prev_obs = 0.0;
    for (i, &idx) in order.iter().enumerate() {
        cum += observed[idx];
        let obs = cum / total;
        let width = 1.0 / n as f64;
        area += width * (obs + prev_obs) / 2.0;
        prev_obs = obs;
        debug_assert!(i < n);
    }
    Ok(area)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use ndarray::array;
    use rand::prelude::*;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn mse_basic_values() {
        let a = array![1.0, 2.0, 3.0];
        assert_abs_diff_eq!(coefficient_mse(a.view(), a.view()).unwrap(), 0.0);
        let mut b = a.clone();
        b[0] += 0.1;
        assert_abs_diff_eq!(
            coefficient_mse(b.view(), a.view()).unwrap(),
            0.01 / 3.0,
            epsilon = 1e-15
        );
        assert!(coefficient_mse(a.view(), array![1.0].view()).is_err());
    }

    #[test]
    fn mse_matches_per_entry_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let a = ndarray::Array1::from_iter((0..225).map(|_| rng.gen_range(-1.0f64..1.0)));
        let b = ndarray::Array1::from_iter((0..225).map(|_| rng.gen_range(-1.0f64..1.0)));
        let mut acc = 0.0;
        for i in 0..225 {
            acc += (a[i] - b[i]) * (a[i] - b[i]);
        }
        assert_abs_diff_eq!(
            coefficient_mse(a.view(), b.view()).unwrap(),
            acc / 225.0,
            epsilon = 1e-15
        );
    }

    #[test]
    fn auc_perfect_and_uninformative() {
        let scores = [0.1, 0.2, 0.8, 0.9];
        let labels = [false, false, true, true];
        assert_abs_diff_eq!(roc_auc(&scores, &labels).unwrap(), 1.0, epsilon = 1e-15);
        let flat = [0.5, 0.5, 0.5, 0.5];
        assert_abs_diff_eq!(roc_auc(&flat, &labels).unwrap(), 0.5, epsilon = 1e-15);
        assert!(roc_auc(&scores, &[true, true, true, true]).is_err());
    }

    #[test]
    fn auc_matches_pairwise_bruteforce() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let n = 60;
        let scores: Vec<f64> = (0..n).map(|_| (rng.gen_range(0..10) as f64) / 10.0).collect();
        let labels: Vec<bool> = (0..n).map(|_| rng.gen::<f64>() < 0.4).collect();
        let fast = roc_auc(&scores, &labels).unwrap();
        let mut wins = 0.0;
        let mut pairs = 0.0;
        for i in 0..n {
            for j in 0..n {
                if labels[i] && !labels[j] {
                    pairs += 1.0;
                    if scores[i] > scores[j] {
                        wins += 1.0;
                    } else if scores[i] == scores[j] {
                        wins += 0.5;
                    }
                }
            }
        }
        assert_abs_diff_eq!(fast, wins / pairs, epsilon = 1e-12);
    }

    #[test]
    fn aucc_single_positive_geometry() {
        // one positive ranked first among n: area = 1 - 1/(2n)
        let n = 10;
        let mut predictions = vec![0.0; n];
        predictions[3] = 1.0;
        let mut observed = vec![0.0; n];
        observed[3] = 1.0;
        let area = lorenz_aucc(&predictions, &observed).unwrap();
        assert_abs_diff_eq!(area, 1.0 - 1.0 / (2.0 * n as f64), epsilon = 1e-12);
    }

    #[test]
    fn aucc_constant_predictions_near_diagonal() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let n = 2000;
        let predictions = vec![1.0; n];
        let observed: Vec<f64> =
            (0..n).map(|_| if rng.gen::<f64>() < 0.3 { 1.0 } else { 0.0 }).collect();
        let area = lorenz_aucc(&predictions, &observed).unwrap();
        assert!((area - 0.5).abs() < 0.03, "area {area}");
    }

    #[test]
    fn aucc_matches_explicit_curve() {
        let predictions = [0.9, 0.1, 0.5, 0.7];
        let observed = [2.0, 0.0, 1.0, 1.0];
        // descending order: idx 0 (2), idx 3 (1), idx 2 (1), idx 1 (0)
        // cum shares: .5, .75, 1, 1 at prop .25, .5, .75, 1
        let expected = 0.25 * (0.5 / 2.0)
            + 0.25 * ((0.5 + 0.75) / 2.0)
            + 0.25 * ((0.75 + 1.0) / 2.0)
            + 0.25 * 1.0;
        assert_abs_diff_eq!(
            lorenz_aucc(&predictions, &observed).unwrap(),
            expected,
            epsilon = 1e-12
        );
        assert!(lorenz_aucc(&predictions, &[0.0; 4]).is_err());
    }

    #[test]
    fn aucc_invariant_under_monotone_transform() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let n = 300;
        let predictions: Vec<f64> = (0..n).map(|_| rng.gen_range(0.01..2.0)).collect();
        let observed: Vec<f64> = (0..n).map(|_| rng.gen_range(0..4) as f64).collect();
        let base = lorenz_aucc(&predictions, &observed).unwrap();
        let transformed: Vec<f64> = predictions.iter().map(|p| (3.0 * p).exp()).collect();
        assert_abs_diff_eq!(
            lorenz_aucc(&transformed, &observed).unwrap(),
            base,
            epsilon = 1e-12
        );
    }
}
