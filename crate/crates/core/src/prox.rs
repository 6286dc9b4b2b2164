//! Closed-form proximal operators: identity (intercept), soft thresholding
//! (Lasso) and group soft thresholding (Group Lasso). The fused penalties
//! have no closed form and are handled by the ADMM solver in [`crate::admm`].

use ndarray::{Array1, ArrayView1};

use crate::error::{Error, Result};

/// Proximal operator of the zero function: the identity.
pub fn prox_identity(beta_tilde: f64) -> f64 {
    beta_tilde
}

/// Scalar soft threshold `x (1 - t/|x|)_+`. The zero branch returns an exact
/// `0.0`. Caller guarantees `t >= 0`.
#[inline]
pub fn soft_threshold_scalar(x: f64, t: f64) -> f64 {
    debug_assert!(t >= 0.0);
    if x.abs() <= t {
        0.0
    } else {
        x * (1.0 - t / x.abs())
    }
}

/// Entrywise soft thresholding with per-entry thresholds.
pub fn soft_threshold(beta_tilde: ArrayView1<f64>, thresholds: ArrayView1<f64>) -> Result<Array1<f64>> {
    if beta_tilde.len() != thresholds.len() {
        return Err(Error::ShapeMismatch(format!(
            "{} inputs vs {} thresholds",
            beta_tilde.len(),
            thresholds.len()
        )));
    }
    if thresholds.iter().any(|&t| t < 0.0 || !t.is_finite()) {
        return Err(Error::InvalidArgument("thresholds must be nonnegative and finite".into()));
    }
    Ok(Array1::from_iter(
        beta_tilde.iter().zip(thresholds).map(|(&x, &t)| soft_threshold_scalar(x, t)),
    ))
}

/// Group soft thresholding: the whole block scaled by `(1 - t/||x||_2)_+`,
/// an exact zero vector when `||x||_2 <= t`. A single-entry block reduces to
/// scalar soft thresholding.
pub fn group_soft_threshold(beta_tilde: ArrayView1<f64>, threshold: f64) -> Result<Array1<f64>> {
    if threshold < 0.0 || !threshold.is_finite() {
        return Err(Error::InvalidArgument(format!(
            "group threshold must be nonnegative and finite, got {threshold}"
        )));
    }
    let norm = beta_tilde.iter().map(|v| v * v).sum::<f64>().sqrt();
    if norm <= threshold {
        Ok(Array1::zeros(beta_tilde.len()))
    } else {
        Ok(beta_tilde.mapv(|v| v * (1.0 - threshold / norm)))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use ndarray::array;
    use rand::prelude::*;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn identity_prox() {
        assert_eq!(prox_identity(0.0), 0.0);
        assert_eq!(prox_identity(3.7), 3.7);
        assert_eq!(prox_identity(-1.2), -1.2);
    }

    #[test]
    fn soft_threshold_values() {
        assert_abs_diff_eq!(soft_threshold_scalar(3.0, 1.0), 2.0, epsilon = 1e-15);
        assert_eq!(soft_threshold_scalar(0.5, 1.0).to_bits(), 0.0f64.to_bits());
        assert_abs_diff_eq!(soft_threshold_scalar(-2.0, 0.5), -1.5, epsilon = 1e-15);
    }

    #[test]
    fn negative_threshold_rejected() {
        let x = array![1.0];
        assert!(soft_threshold(x.view(), array![-0.1].view()).is_err());
        assert!(group_soft_threshold(x.view(), -0.1).is_err());
    }

    #[test]
    fn group_threshold_kills_block_at_norm() {
        // ||(3,4)||_2 = 5
        let x = array![3.0, 4.0];
        let z = group_soft_threshold(x.view(), 5.0).unwrap();
        assert!(z.iter().all(|v| v.to_bits() == 0.0f64.to_bits()));
        let half = group_soft_threshold(x.view(), 2.5).unwrap();
        assert_abs_diff_eq!(half[0], 1.5, epsilon = 1e-15);
        assert_abs_diff_eq!(half[1], 2.0, epsilon = 1e-15);
    }

    #[test]
    fn single_entry_group_equals_soft_threshold() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        for _ in 0..200 {
            let x: f64 = rng.gen_range(-3.0..3.0);
            let t: f64 = rng.gen_range(0.0..2.0);
            let grp = group_soft_threshold(array![x].view(), t).unwrap();
            assert_eq!(grp[0].to_bits(), soft_threshold_scalar(x, t).to_bits());
        }
    }

    #[test]
    fn nonexpansive() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..100 {
            let a = Array1::from_iter((0..4).map(|_| rng.gen_range(-2.0f64..2.0)));
            let b = Array1::from_iter((0..4).map(|_| rng.gen_range(-2.0f64..2.0)));
            let t: f64 = rng.gen_range(0.0..1.5);
            let thresholds = Array1::from_elem(4, t);
            let pa = soft_threshold(a.view(), thresholds.view()).unwrap();
            let pb = soft_threshold(b.view(), thresholds.view()).unwrap();
            let d_in = (&a - &b).iter().map(|v| v * v).sum::<f64>().sqrt();
            let d_out = (&pa - &pb).iter().map(|v| v * v).sum::<f64>().sqrt();
            assert!(d_out <= d_in + 1e-12);

            let ga = group_soft_threshold(a.view(), t).unwrap();
            let gb = group_soft_threshold(b.view(), t).unwrap();
            let d_out = (&ga - &gb).iter().map(|v| v * v).sum::<f64>().sqrt();
            assert!(d_out <= d_in + 1e-12);
        }
    }

    #[test]
    fn zero_threshold_is_identity_even_at_zero_input() {
        assert_eq!(soft_threshold_scalar(0.0, 0.0).to_bits(), 0.0f64.to_bits());
        let z = group_soft_threshold(array![0.0, 0.0].view(), 0.0).unwrap();
        assert!(z.iter().all(|v| *v == 0.0));
    }
}
