//! Penalty weight schemes: equal, adaptive (inverse initial estimates),
//! standardization (level-imbalance correction), and their combination.
//!
//! Weight vectors are laid out per block: one entry per coefficient for
//! Lasso, a single entry for Group Lasso, and one entry per graph edge for
//! the fused penalties. The intercept block carries an empty vector.

use ndarray::Array1;

use crate::error::{Error, Result};
use crate::family::irls_fit;
use crate::model::{ModelSpec, PenaltyKind, PredictorBlock};
use crate::standardize::standardize_columns;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum WeightScheme {
    Equal,
    Adaptive,
    Standardization,
    Combined,
}

impl WeightScheme {
    /// Setting names as used in configuration: `eq`, `ad`, `st`, `ad.st`.
    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "eq" => Ok(Self::Equal),
            "ad" => Ok(Self::Adaptive),
            "st" => Ok(Self::Standardization),
            "ad.st" => Ok(Self::Combined),
            other => Err(Error::InvalidArgument(format!(
                "unknown weight scheme `{other}` (expected eq, ad, st or ad.st)"
            ))),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Self::Equal => "eq",
            Self::Adaptive => "ad",
            Self::Standardization => "st",
            Self::Combined => "ad.st",
        }
    }
}

#[derive(Debug, Clone)]
pub struct WeightOptions {
    /// Cap applied to every weight; inverse differences of identical initial
    /// estimates would otherwise be infinite.
    pub cap: f64,
    /// Ridge penalty of the initial fit behind the adaptive weights.
    pub ridge: f64,
    /// Compute the initial estimate on the standardized design (must match
    /// the solver's standardization setting so the weights act on the same
    /// scale as the penalty).
    pub standardize: bool,
}

impl Default for WeightOptions {
    fn default() -> Self {
        Self { cap: 1e10, ridge: 1e-6, standardize: true }
    }
}

/// Per-block weight vectors aligned with `ModelSpec::blocks()`.
#[derive(Debug, Clone)]
pub struct PenaltyWeights {
    pub per_block: Vec<Vec<f64>>,
}

impl PenaltyWeights {
    pub fn equal(spec: &ModelSpec) -> Self {
        let per_block =
            spec.blocks().iter().map(|b| vec![1.0; expected_weight_len(b)]).collect();
        Self { per_block }
    }

    pub fn validate(&self, spec: &ModelSpec) -> Result<()> {
        if self.per_block.len() != spec.blocks().len() {
            return Err(Error::ShapeMismatch(format!(
                "{} weight vectors for {} blocks",
                self.per_block.len(),
                spec.blocks().len()
            )));
        }
        for (block, w) in spec.blocks().iter().zip(&self.per_block) {
            let expected = expected_weight_len(block);
            if w.len() != expected {
                return Err(Error::ShapeMismatch(format!(
                    "block `{}` expects {expected} weights, got {}",
                    block.name,
                    w.len()
                )));
            }
            if w.iter().any(|&v| !(v.is_finite() && v > 0.0)) {
                return Err(Error::InvalidArgument(format!(
                    "block `{}` has a nonpositive or nonfinite weight",
                    block.name
                )));
            }
        }
        Ok(())
    }

    /// Smallest weight over all penalized entries.
    pub fn min_weight(&self) -> f64 {
        self.per_block
            .iter()
            .flatten()
            .copied()
            .fold(f64::INFINITY, f64::min)
    }
}

fn expected_weight_len(block: &PredictorBlock) -> usize {
    match block.penalty {
        PenaltyKind::None => 0,
        PenaltyKind::Lasso => block.n_coefficients(),
        PenaltyKind::GroupLasso => 1,
        PenaltyKind::FusedLasso | PenaltyKind::GeneralizedFusedLasso => {
            block.graph.as_ref().map_or(0, |g| g.n_edges())
        }
    }
}

/// Adaptive weights from an initial estimate of the block coefficients.
/// `level_values` must carry per-level values for fused blocks (reference
/// level included as 0) and plain coefficients otherwise.
pub fn adaptive_weights(block: &PredictorBlock, level_values: &[f64], cap: f64) -> Vec<f64> {
    let capped = |v: f64| if v.is_finite() { v.min(cap) } else { cap };
    match block.penalty {
        PenaltyKind::None => vec![],
        PenaltyKind::Lasso => level_values.iter().map(|b| capped(b.abs().recip())).collect(),
        PenaltyKind::GroupLasso => {
            let norm = level_values.iter().map(|b| b * b).sum::<f64>().sqrt();
            vec![capped(norm.recip())]
        }
        PenaltyKind::FusedLasso | PenaltyKind::GeneralizedFusedLasso => {
            let graph = block.graph.as_ref().expect("fused block carries a graph");
            graph
                .edges()
                .iter()
                .map(|&(i, l)| capped((level_values[i] - level_values[l]).abs().recip()))
                .collect()
        }
    }
}

/// Standardization weights: `sqrt((n_i + n_l) / n)` per regularized
/// difference, scaled by `(p_j - 1) / r_G` for graphs other than the chain
/// (the factor is exactly 1 there); 1 for Lasso and Group Lasso.
pub fn standardization_weights(block: &PredictorBlock, n: usize) -> Result<Vec<f64>> {
    if n == 0 {
        return Err(Error::InvalidArgument("standardization weights need n > 0".into()));
    }
    match block.penalty {
        PenaltyKind::None => Ok(vec![]),
        PenaltyKind::Lasso => Ok(vec![1.0; block.n_coefficients()]),
        PenaltyKind::GroupLasso => Ok(vec![1.0]),
        PenaltyKind::FusedLasso | PenaltyKind::GeneralizedFusedLasso => {
            let graph = block.graph.as_ref().expect("fused block carries a graph");
            let info = block.levels.as_ref().ok_or_else(|| {
                Error::InvalidSpec(format!("fused block `{}` lacks level counts", block.name))
            })?;
            let factor = (info.n_levels() - 1) as f64 / graph.n_edges() as f64;
            graph
                .edges()
                .iter()
                .map(|&(i, l)| {
                    let pair = info.counts[i] + info.counts[l];
                    if pair == 0 {
                        return Err(Error::InvalidArgument(format!(
                            "block `{}`: levels {i} and {l} have no observations; \
                             standardization weight would vanish",
                            block.name
                        )));
                    }
                    Ok(factor * (pair as f64 / n as f64).sqrt())
                })
                .collect()
        }
    }
}

/// Elementwise product of adaptive and standardization weights, capped last.
pub fn combined_weights(adaptive: &[f64], standardization: &[f64], cap: f64) -> Result<Vec<f64>> {
    if adaptive.len() != standardization.len() {
        return Err(Error::ShapeMismatch(format!(
            "adaptive weights have {} entries, standardization {}",
            adaptive.len(),
            standardization.len()
        )));
    }
    Ok(adaptive.iter().zip(standardization).map(|(a, s)| (a * s).min(cap)).collect())
}

/// Compute the penalty weights for a scheme. Adaptive and combined schemes
/// run a ridge-stabilized GLM fit for the initial estimate (on the
/// standardized design when `options.standardize` is set).
pub fn compute_weights(
    spec: &ModelSpec,
    scheme: WeightScheme,
    options: &WeightOptions,
) -> Result<PenaltyWeights> {
    if scheme == WeightScheme::Equal {
        return Ok(PenaltyWeights::equal(spec));
    }

    let needs_initial_fit = matches!(scheme, WeightScheme::Adaptive | WeightScheme::Combined);
    let initial: Option<(ModelSpec, Array1<f64>)> = if needs_initial_fit {
        let (fit_spec, _record) = if options.standardize {
            standardize_columns(spec)?
        } else {
            (spec.clone(), crate::standardize::StandardizationRecord::identity(spec.p()))
        };
        let fit = irls_fit(&fit_spec, options.ridge)?;
        Some((fit_spec, fit.coefficients))
    } else {
        None
    };

    // Fused penalties read per-level values (reference included as 0), the
    // other penalties read the block coefficients directly.
    let initial_values = |block: &PredictorBlock| -> Vec<f64> {
        let (fit_spec, beta_hat) = initial.as_ref().unwrap();
        if block.penalty.is_fused() {
            fit_spec.level_values(block, beta_hat)
        } else {
            fit_spec.block_coefficients(block, beta_hat).to_vec()
        }
    };

    let mut per_block = Vec::with_capacity(spec.blocks().len());
    for block in spec.blocks() {
        let w = match scheme {
            WeightScheme::Equal => unreachable!(),
            WeightScheme::Standardization => standardization_weights(block, spec.n())?,
            WeightScheme::Adaptive => adaptive_weights(block, &initial_values(block), options.cap),
            WeightScheme::Combined => {
                let ad = adaptive_weights(block, &initial_values(block), options.cap);
                let st = standardization_weights(block, spec.n())?;
                combined_weights(&ad, &st, options.cap)?
            }
        };
        per_block.push(w);
    }

    let weights = PenaltyWeights { per_block };
    weights.validate(spec)?;
    Ok(weights)
}
