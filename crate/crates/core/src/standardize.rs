//! Column standardization for Lasso and Group Lasso blocks.
//!
//! Columns of fused-penalty blocks are left untouched: standardizing them
//! would change what a level-difference means. The standard deviation uses
//! the population (1/n) convention.

use ndarray::Array1;

use crate::error::{Error, Result};
use crate::model::{ModelSpec, PenaltyKind};

/// Per-column centering/scaling applied before a fit, used to map
/// coefficients back to the original scale. Untouched columns carry
/// `mean = 0, scale = 1`.
#[derive(Debug, Clone)]
pub struct StandardizationRecord {
    pub mean: Vec<f64>,
    pub scale: Vec<f64>,
}

impl StandardizationRecord {
    pub fn identity(p: usize) -> Self {
        Self { mean: vec![0.0; p], scale: vec![1.0; p] }
    }

    pub fn is_identity(&self) -> bool {
        self.mean.iter().all(|&m| m == 0.0) && self.scale.iter().all(|&s| s == 1.0)
    }
}

/// Center and scale the columns of Lasso and Group Lasso blocks to mean 0 and
/// population standard deviation 1. Returns the transformed spec together
/// with the record needed to undo the transform on coefficients.
pub fn standardize_columns(spec: &ModelSpec) -> Result<(ModelSpec, StandardizationRecord)> {
    let n = spec.n() as f64;
    let mut out = spec.clone();
    let mut record = StandardizationRecord::identity(spec.p());

    for block in spec.blocks() {
        if !matches!(block.penalty, PenaltyKind::Lasso | PenaltyKind::GroupLasso) {
            continue;
        }
        for col in block.design_columns() {
            let column = spec.design().values.column(col);
            let mean = column.sum() / n;
            let var = column.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
            let sd = var.sqrt();
            if sd <= 0.0 || !sd.is_finite() {
                return Err(Error::ConstantColumn(block.name.clone()));
            }
            record.mean[col] = mean;
            record.scale[col] = sd;
        }
    }

    // ModelSpec is immutable from outside; rebuild through the validated
    // constructor would re-check dummy coding which no longer holds for the
    // transformed columns, so mutate the cloned design in place.
    out.apply_standardization(&record);
    Ok((out, record))
}

/// Map coefficients estimated on the standardized scale back to the original
/// scale. Centering is absorbed into the intercept.
pub fn destandardize_coefficients(
    beta_std: &Array1<f64>,
    record: &StandardizationRecord,
) -> Result<Array1<f64>> {
    check_len(beta_std, record)?;
    let mut beta = beta_std.clone();
    for j in 0..record.mean.len() {
        beta[j + 1] = beta_std[j + 1] / record.scale[j];
        beta[0] -= record.mean[j] * beta_std[j + 1] / record.scale[j];
    }
    Ok(beta)
}

/// Inverse of [`destandardize_coefficients`]: express original-scale
/// coefficients on the standardized scale.
pub fn standardize_coefficients(
    beta: &Array1<f64>,
    record: &StandardizationRecord,
) -> Result<Array1<f64>> {
    check_len(beta, record)?;
    let mut out = beta.clone();
    for j in 0..record.mean.len() {
        out[j + 1] = beta[j + 1] * record.scale[j];
        out[0] += record.mean[j] * beta[j + 1];
    }
    Ok(out)
}

fn check_len(beta: &Array1<f64>, record: &StandardizationRecord) -> Result<()> {
    if beta.len() != record.mean.len() + 1 || record.scale.len() != record.mean.len() {
        return Err(Error::ShapeMismatch(format!(
            "coefficient vector of length {} does not match standardization record over {} columns",
            beta.len(),
            record.mean.len()
        )));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::family::Family;
    use crate::model::{ModelSpecBuilder, PenaltyKind};
    use approx::assert_abs_diff_eq;
    use ndarray::array;
    use rand::prelude::*;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn standardized_columns_have_mean_zero_sd_one() {
        let spec = ModelSpecBuilder::new(Family::Gaussian)
            .response(array![1.0, 2.0, 3.0])
            .add_numeric("x", vec![("x".into(), array![1.0, 2.0, 3.0])], PenaltyKind::Lasso)
            .build()
            .unwrap();
        let (std_spec, record) = standardize_columns(&spec).unwrap();
        let col = std_spec.design().values.column(0);
        assert_abs_diff_eq!(col.sum(), 0.0, epsilon = 1e-12);
        let var = col.iter().map(|v| v * v).sum::<f64>() / 3.0;
        assert_abs_diff_eq!(var, 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(record.mean[0], 2.0, epsilon = 1e-15);
    }

    #[test]
    fn fused_columns_left_untouched() {
        let spec = ModelSpecBuilder::new(Family::Binomial)
            .response(array![0.0, 1.0, 1.0, 0.0])
            .add_factor(
                "f",
                vec!["a".into(), "b".into(), "c".into()],
                &[0, 1, 2, 1],
                PenaltyKind::FusedLasso,
                None,
                Some(0),
            )
            .build()
            .unwrap();
        let (std_spec, record) = standardize_columns(&spec).unwrap();
        assert!(record.is_identity());
        assert_eq!(std_spec.design().values, spec.design().values);
    }

    #[test]
    fn constant_column_errors_with_predictor_name() {
        let spec = ModelSpecBuilder::new(Family::Gaussian)
            .response(array![1.0, 2.0, 3.0])
            .add_numeric("flat", vec![("flat".into(), array![1.0, 1.0, 1.0])], PenaltyKind::Lasso)
            .build()
            .unwrap();
        let err = standardize_columns(&spec).unwrap_err();
        assert!(err.to_string().contains("flat"));
    }

    #[test]
    fn round_trip_preserves_linear_predictor() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let n = 50;
        let p = 5;
        let cols: Vec<(String, Array1<f64>)> = (0..p)
            .map(|j| {
                (format!("x{j}"), Array1::from_iter((0..n).map(|_| rng.gen_range(-2.0..3.0))))
            })
            .collect();
        let y = Array1::from_iter((0..n).map(|_| rng.gen_range(-1.0..1.0)));
        let spec = ModelSpecBuilder::new(Family::Gaussian)
            .response(y)
            .add_numeric("x", cols, PenaltyKind::Lasso)
            .build()
            .unwrap();
        let (std_spec, record) = standardize_columns(&spec).unwrap();

        let beta_std = Array1::from_iter((0..=p).map(|_| rng.gen_range(-1.0f64..1.0)));
        let beta = destandardize_coefficients(&beta_std, &record).unwrap();
        let eta_std = std_spec.linear_predictor(beta_std.view());
        let eta = spec.linear_predictor(beta.view());
        for i in 0..n {
            assert_abs_diff_eq!(eta_std[i], eta[i], epsilon = 1e-12);
        }

        let back = standardize_coefficients(&beta, &record).unwrap();
        for j in 0..=p {
            assert_abs_diff_eq!(back[j], beta_std[j], epsilon = 1e-12);
        }
    }

    #[test]
    fn identity_record_keeps_coefficients() {
        let record = StandardizationRecord::identity(3);
        let beta = array![0.5, 1.0, -1.0, 2.0];
        assert_eq!(destandardize_coefficients(&beta, &record).unwrap(), beta);
    }

    #[test]
    fn centering_absorbed_by_intercept() {
        // column mean m, scale s, standardized slope b -> original slope b/s,
        // intercept shift -b m / s
        let record = StandardizationRecord { mean: vec![3.0], scale: vec![2.0] };
        let beta_std = array![1.0, 4.0];
        let beta = destandardize_coefficients(&beta_std, &record).unwrap();
        assert_abs_diff_eq!(beta[1], 2.0, epsilon = 1e-15);
        assert_abs_diff_eq!(beta[0], 1.0 - 4.0 * 3.0 / 2.0, epsilon = 1e-15);
    }
}
