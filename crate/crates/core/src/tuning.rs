//! Lambda-grid construction, performance criteria, stratified K-fold
//! cross-validation and the one-standard-error rule.
//!
//! All tuning protocols also fit the full-data path over the grid (with warm
//! starts from the previous lambda), so the selected model is available
//! without refitting.

use ndarray::{Array1, ArrayView1};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::family::{predict_mean, Family};
use crate::model::ModelSpec;
use crate::solver::{FitResult, Fitter, SolverSettings};
use crate::weights::{compute_weights, WeightOptions, WeightScheme};

/// Performance criteria; `d` is the model degrees of freedom (number of
/// unique nonzero coefficients) and `L` the unscaled likelihood.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Criterion {
    /// `-2 log L + 2 d`
    Aic,
    /// `-2 log L + log(n) d`
    Bic,
    /// `-2 log L`
    Deviance,
    /// `(1/n) sqrt(sum (y - mu)^2)`, as printed in the reference table; the
    /// form is monotone in the squared error so argmin selection is
    /// unaffected.
    Mspe,
    /// Dawid-Sebastiani score `sum ((y - mu)/sigma)^2 + 2 log sigma`.
    Dss,
}

impl Criterion {
    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "AIC" | "aic" => Ok(Self::Aic),
            "BIC" | "bic" => Ok(Self::Bic),
            "dev" | "deviance" => Ok(Self::Deviance),
            "MSPE" | "mspe" => Ok(Self::Mspe),
            "DSS" | "dss" => Ok(Self::Dss),
            other => Err(Error::InvalidArgument(format!("unknown criterion `{other}`"))),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Self::Aic => "AIC",
            Self::Bic => "BIC",
            Self::Deviance => "dev",
            Self::Mspe => "MSPE",
            Self::Dss => "DSS",
        }
    }
}

/// Evaluate a criterion for predictions `mu` of `y`. The Gaussian DSS
/// dispersion is the residual mean square of the scored fit; observations
/// with a vanishing dispersion are skipped with a warning.
pub fn criterion_value(
    criterion: Criterion,
    family: Family,
    y: ArrayView1<f64>,
    mu: ArrayView1<f64>,
    df: usize,
) -> f64 {
    let n = y.len() as f64;
    match criterion {
        Criterion::Aic => -2.0 * family.log_likelihood(y, mu) + 2.0 * df as f64,
        Criterion::Bic => -2.0 * family.log_likelihood(y, mu) + n.ln() * df as f64,
        Criterion::Deviance => -2.0 * family.log_likelihood(y, mu),
        Criterion::Mspe => {
            let sse: f64 = y.iter().zip(&mu).map(|(y, m)| (y - m) * (y - m)).sum();
            sse.sqrt() / n
        }
        Criterion::Dss => {
            // Gaussian dispersion: residual mean square of the scored fit.
            let gaussian_s2 = match family {
                Family::Gaussian => {
                    y.iter().zip(&mu).map(|(y, m)| (y - m) * (y - m)).sum::<f64>() / n
                }
                _ => 0.0,
            };
            let mut total = 0.0;
            let mut skipped = 0usize;
            for (&yi, &mi) in y.iter().zip(&mu) {
                let s2 = match family {
                    Family::Gaussian => gaussian_s2,
                    Family::Binomial => mi * (1.0 - mi),
                    Family::Poisson => mi,
                };
                if s2 <= 0.0 {
                    skipped += 1;
                    continue;
                }
                total += (yi - mi) * (yi - mi) / s2 + s2.sqrt().ln() * 2.0;
            }
            if skipped > 0 {
                log::warn!("DSS: skipped {skipped} observations with zero dispersion");
            }
            total
        }
    }
}

/// Degrees of freedom: the number of unique nonzero coefficient values,
/// counted per block (values closer than `tolerance` are one group; groups
/// within `tolerance` of zero do not count). The intercept is a block of its
/// own.
pub fn df_estimate(spec: &ModelSpec, beta: &Array1<f64>, tolerance: f64) -> usize {
    let mut df = 0usize;
    for block in spec.blocks() {
        let values = spec.block_coefficients(block, beta);
        let mut sorted: Vec<f64> = values.iter().copied().collect();
        sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let mut i = 0;
        while i < sorted.len() {
            let mut j = i;
            while j + 1 < sorted.len() && sorted[j + 1] - sorted[j] <= tolerance {
                j += 1;
            }
            let representative = sorted[(i + j) / 2];
            if representative.abs() > tolerance {
                df += 1;
            }
            i = j + 1;
        }
    }
    df
}

/// Fold index per observation.
#[derive(Debug, Clone)]
pub struct FoldAssignment {
    pub fold_of: Vec<usize>,
    pub k: usize,
}

impl FoldAssignment {
    pub fn fold_rows(&self, fold: usize) -> Vec<usize> {
        (0..self.fold_of.len()).filter(|&i| self.fold_of[i] == fold).collect()
    }

    pub fn train_rows(&self, fold: usize) -> Vec<usize> {
        (0..self.fold_of.len()).filter(|&i| self.fold_of[i] != fold).collect()
    }
}

/// Stratum labels for a response: the response levels themselves for
/// binomial and Poisson models, quintile bins for Gaussian responses.
fn response_strata(family: Family, y: ArrayView1<f64>) -> Vec<usize> {
    match family {
        Family::Binomial => y.iter().map(|&v| v as usize).collect(),
        Family::Poisson => y.iter().map(|&v| v as usize).collect(),
        Family::Gaussian => {
            let n = y.len();
            let mut order: Vec<usize> = (0..n).collect();
            order.sort_by(|&a, &b| y[a].partial_cmp(&y[b]).unwrap());
            let mut strata = vec![0usize; n];
            for (rank, &idx) in order.iter().enumerate() {
                strata[idx] = rank * 5 / n;
            }
            strata
        }
    }
}

/// Stratified K-fold assignment: within every response level the (shuffled)
/// observations are dealt round-robin, so per-level fold counts differ by at
/// most one. Deterministic for a given seed.
pub fn stratified_kfold(
    family: Family,
    y: ArrayView1<f64>,
    k: usize,
    seed: u64,
) -> Result<FoldAssignment> {
    let n = y.len();
    if k < 2 {
        return Err(Error::InvalidArgument(format!("need at least 2 folds, got {k}")));
    }
    if k > n {
        return Err(Error::InvalidArgument(format!("{k} folds exceed {n} observations")));
    }
    let strata = response_strata(family, y);
    let mut by_stratum: std::collections::BTreeMap<usize, Vec<usize>> = Default::default();
    for (i, &s) in strata.iter().enumerate() {
        by_stratum.entry(s).or_default().push(i);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut fold_of = vec![0usize; n];
    for (stratum_rank, (_, members)) in by_stratum.iter_mut().enumerate() {
        members.shuffle(&mut rng);
        // stagger the starting fold per stratum to keep overall sizes close
        let start = stratum_rank % k;
        for (pos, &idx) in members.iter().enumerate() {
            fold_of[idx] = (start + pos) % k;
        }
    }
    Ok(FoldAssignment { fold_of, k })
}

/// Stratified train/validation split with the given training fraction.
pub fn stratified_split(
    family: Family,
    y: ArrayView1<f64>,
    train_fraction: f64,
    seed: u64,
) -> Result<(Vec<usize>, Vec<usize>)> {
    if !(train_fraction > 0.0 && train_fraction < 1.0) {
        return Err(Error::InvalidArgument(format!(
            "train fraction must lie in (0, 1), got {train_fraction}"
        )));
    }
    let strata = response_strata(family, y);
    let mut by_stratum: std::collections::BTreeMap<usize, Vec<usize>> = Default::default();
    for (i, &s) in strata.iter().enumerate() {
        by_stratum.entry(s).or_default().push(i);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut train = Vec::new();
    let mut valid = Vec::new();
    for (_, members) in by_stratum.iter_mut() {
        members.shuffle(&mut rng);
        let n_train = ((members.len() as f64) * train_fraction).round() as usize;
        let n_train = n_train.min(members.len());
        train.extend_from_slice(&members[..n_train]);
        valid.extend_from_slice(&members[n_train..]);
    }
    if train.is_empty() || valid.is_empty() {
        return Err(Error::InvalidArgument("degenerate train/validation split".into()));
    }
    train.sort_unstable();
    valid.sort_unstable();
    Ok((train, valid))
}

/// Strictly decreasing lambda grid.
#[derive(Debug, Clone)]
pub struct LambdaGrid {
    pub values: Vec<f64>,
    pub lambda_max: f64,
    pub ratio: f64,
}

impl LambdaGrid {
    /// Log-spaced grid from `lambda_max` down to `ratio * lambda_max`.
    pub fn log_spaced(lambda_max: f64, ratio: f64, count: usize) -> Result<Self> {
        if !(lambda_max.is_finite() && lambda_max > 0.0) {
            return Err(Error::InvalidArgument(format!("lambda_max must be positive, got {lambda_max}")));
        }
        if !(ratio > 0.0 && ratio < 1.0) {
            return Err(Error::InvalidArgument(format!(
                "grid ratio must lie in (0, 1) so the grid has at least 2 distinct values, got {ratio}"
            )));
        }
        if count < 2 {
            return Err(Error::InvalidArgument(format!("grid needs at least 2 values, got {count}")));
        }
        let log_max = lambda_max.ln();
        let log_min = (lambda_max * ratio).ln();
        let values = (0..count)
            .map(|i| {
                let t = i as f64 / (count - 1) as f64;
                (log_max + t * (log_min - log_max)).exp()
            })
            .collect();
        Ok(Self { values, lambda_max, ratio })
    }
}

/// Is every penalized block fully collapsed: Lasso/Group blocks all zero,
/// fused blocks with a reference all zero, reference-free fused blocks fused
/// to a single value.
fn all_blocks_collapsed(spec: &ModelSpec, beta: &Array1<f64>, tol: f64) -> bool {
    for block in spec.blocks() {
        if block.is_intercept() {
            continue;
        }
        let b = spec.block_coefficients(block, beta);
        let has_reference =
            block.levels.as_ref().map_or(false, |l| l.reference.is_some());
        let collapsed = if block.penalty.is_fused() && !has_reference {
            let max = b.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            let min = b.iter().cloned().fold(f64::INFINITY, f64::min);
            max - min <= tol
        } else {
            b.iter().all(|v| v.abs() <= tol)
        };
        if !collapsed {
            return false;
        }
    }
    true
}

/// Build the default grid: a doubling probe search for the smallest anchor
/// that collapses every penalized block, started from
/// `||grad f(intercept-only)||_inf / min(weights)`, then log-spaced down to
/// `ratio * lambda_max`.
pub fn default_lambda_grid(
    spec: &ModelSpec,
    weights: &crate::weights::PenaltyWeights,
    settings: &SolverSettings,
    count: usize,
    ratio: f64,
) -> Result<LambdaGrid> {
    let fitter = Fitter::new(spec, weights, settings.clone())?;

    // gradient at the intercept-only optimum of the internal problem
    let internal = fitter.internal_spec();
    let intercept_fit = crate::family::irls_core(
        spec.family(),
        internal.design().values.slice(ndarray::s![.., 0..0]),
        internal.response().view(),
        internal.design().offset.view(),
        0.0,
    )?;
    let mut beta0 = Array1::zeros(internal.n_coefficients());
    beta0[0] = intercept_fit.coefficients[0];
    let grad = crate::family::gradient(internal, beta0.view());
    let g_inf = grad
        .iter()
        .skip(1)
        .map(|g| g.abs())
        .fold(0.0f64, f64::max);
    if g_inf <= 0.0 {
        return Err(Error::Numerical(
            "gradient at the intercept-only fit vanishes; nothing to regularize".into(),
        ));
    }

    let mut lambda = g_inf / weights.min_weight();
    let tol = settings.fusion_tol;
    let mut lambda_max = None;
    for _ in 0..60 {
        let fit = fitter.fit(lambda, None)?;
        if all_blocks_collapsed(spec, &fit.coefficients, tol) {
            lambda_max = Some(lambda);
            break;
        }
        lambda *= 2.0;
    }
    let lambda_max = lambda_max.ok_or_else(|| {
        Error::Numerical("no lambda collapsing all penalized blocks was found".into())
    })?;
    LambdaGrid::log_spaced(lambda_max, ratio, count)
}

/// Tuning output: the criterion path, the selected lambdas and the full-data
/// path fits.
#[derive(Debug, Clone)]
pub struct TuningResult {
    pub criterion: Criterion,
    pub lambdas: Vec<f64>,
    /// Mean criterion per lambda (across folds for CV, single values
    /// otherwise).
    pub mean: Vec<f64>,
    /// Standard deviation across folds (zeros outside CV).
    pub sd: Vec<f64>,
    /// Degrees of freedom per lambda, from the full-data path.
    pub df: Vec<usize>,
    /// Full-data path fits, aligned with `lambdas`.
    pub path: Vec<FitResult>,
    pub selected_min: f64,
    pub selected_1se: f64,
    /// Fold fits excluded because they did not converge.
    pub excluded_fits: usize,
}

impl TuningResult {
    pub fn selected_index_min(&self) -> usize {
        select_min(&self.mean)
    }

    pub fn selected_index_1se(&self) -> usize {
        select_1se(&self.mean, &self.sd)
    }

    /// The full-data fit at `selected_min`.
    pub fn fit_at_min(&self) -> &FitResult {
        &self.path[self.selected_index_min()]
    }

    /// The full-data fit at `selected_1se`.
    pub fn fit_at_1se(&self) -> &FitResult {
        &self.path[self.selected_index_1se()]
    }
}

/// Index of the minimum mean; ties resolve to the largest lambda (grids are
/// descending, so the first index wins).
fn select_min(mean: &[f64]) -> usize {
    let mut best = 0;
    for i in 1..mean.len() {
        if mean[i] < mean[best] {
            best = i;
        }
    }
    best
}

/// Largest lambda whose mean lies within one standard deviation of the
/// minimum.
fn select_1se(mean: &[f64], sd: &[f64]) -> usize {
    let best = select_min(mean);
    let bound = mean[best] + sd[best];
    for i in 0..mean.len() {
        if mean[i] <= bound {
            return i;
        }
    }
    best
}

/// Fit the full-data path over the grid with warm starts.
fn fit_path(
    fitter: &Fitter,
    grid: &LambdaGrid,
) -> Result<Vec<FitResult>> {
    let mut path = Vec::with_capacity(grid.values.len());
    let mut init: Option<Array1<f64>> = None;
    let mut step: Option<f64> = None;
    for &lambda in &grid.values {
        let fit = fitter.fit_with_step(lambda, init.as_ref(), step)?;
        init = Some(fit.coefficients.clone());
        step = Some(fit.step_final);
        path.push(fit);
    }
    Ok(path)
}

/// In-sample tuning: fit on all observations and minimize AIC or BIC.
pub fn in_sample_tune(
    spec: &ModelSpec,
    grid: &LambdaGrid,
    criterion: Criterion,
    scheme: WeightScheme,
    weight_options: &WeightOptions,
    settings: &SolverSettings,
) -> Result<TuningResult> {
    if !matches!(criterion, Criterion::Aic | Criterion::Bic) {
        return Err(Error::InvalidArgument(
            "in-sample tuning uses the AIC or BIC criterion".into(),
        ));
    }
    let weights = compute_weights(spec, scheme, weight_options)?;
    let fitter = Fitter::new(spec, &weights, settings.clone())?;
    let path = fit_path(&fitter, grid)?;
    let df: Vec<usize> =
        path.iter().map(|f| df_estimate(spec, &f.coefficients, settings.fusion_tol)).collect();
    let mean: Vec<f64> = path
        .iter()
        .zip(&df)
        .map(|(fit, &d)| {
            let mu = predict_mean(spec, fit.coefficients.view());
            criterion_value(criterion, spec.family(), spec.response().view(), mu.view(), d)
        })
        .collect();
    let sd = vec![0.0; mean.len()];
    let (selected_min, selected_1se) = selections(&grid.values, &mean, &sd);
    Ok(TuningResult {
        criterion,
        lambdas: grid.values.clone(),
        mean,
        sd,
        df,
        path,
        selected_min,
        selected_1se,
        excluded_fits: 0,
    })
}

/// Out-of-sample tuning: fit the path on a stratified training split and
/// minimize the criterion on the held-out validation part.
pub fn out_of_sample_tune(
    spec: &ModelSpec,
    grid: &LambdaGrid,
    train_fraction: f64,
    criterion: Criterion,
    scheme: WeightScheme,
    weight_options: &WeightOptions,
    settings: &SolverSettings,
    seed: u64,
) -> Result<TuningResult> {
    let (train_rows, valid_rows) =
        stratified_split(spec.family(), spec.response().view(), train_fraction, seed)?;
    let train = spec.subset(&train_rows);
    let valid = spec.subset(&valid_rows);

    let train_weights = compute_weights(&train, scheme, weight_options)?;
    let train_fitter = Fitter::new(&train, &train_weights, settings.clone())?;
    let mut excluded = 0usize;
    let mut mean = Vec::with_capacity(grid.values.len());
    let mut init: Option<Array1<f64>> = None;
    let mut step: Option<f64> = None;
    for &lambda in &grid.values {
        let fit = train_fitter.fit_with_step(lambda, init.as_ref(), step)?;
        init = Some(fit.coefficients.clone());
        step = Some(fit.step_final);
        if !fit.converged {
            log::warn!("out-of-sample tuning: fit at lambda {lambda:.4e} did not converge");
            excluded += 1;
            mean.push(f64::INFINITY);
            continue;
        }
        let mu = predict_mean(&valid, fit.coefficients.view());
        let d = df_estimate(spec, &fit.coefficients, settings.fusion_tol);
        mean.push(criterion_value(criterion, spec.family(), valid.response().view(), mu.view(), d));
    }

    // full-data path for the reported fits and df
    let weights = compute_weights(spec, scheme, weight_options)?;
    let fitter = Fitter::new(spec, &weights, settings.clone())?;
    let path = fit_path(&fitter, grid)?;
    let df: Vec<usize> =
        path.iter().map(|f| df_estimate(spec, &f.coefficients, settings.fusion_tol)).collect();
    let sd = vec![0.0; mean.len()];
    let (selected_min, selected_1se) = selections(&grid.values, &mean, &sd);
    Ok(TuningResult {
        criterion,
        lambdas: grid.values.clone(),
        mean,
        sd,
        df,
        path,
        selected_min,
        selected_1se,
        excluded_fits: excluded,
    })
}

/// Stratified K-fold cross-validation. Every fold fits the whole grid
/// (warm-started) on the other K-1 folds with fold-local penalty weights;
/// the criterion is evaluated on the held-out fold, then averaged per
/// lambda. Folds run in parallel.
pub fn cross_validate(
    spec: &ModelSpec,
    grid: &LambdaGrid,
    k: usize,
    criterion: Criterion,
    scheme: WeightScheme,
    weight_options: &WeightOptions,
    settings: &SolverSettings,
    seed: u64,
) -> Result<TuningResult> {
    let folds = stratified_kfold(spec.family(), spec.response().view(), k, seed)?;

    let per_fold: Vec<Vec<Option<f64>>> = (0..k)
        .into_par_iter()
        .map(|fold| -> Result<Vec<Option<f64>>> {
            let train = spec.subset(&folds.train_rows(fold));
            let eval = spec.subset(&folds.fold_rows(fold));
            let weights = compute_weights(&train, scheme, weight_options)?;
            let fitter = Fitter::new(&train, &weights, settings.clone())?;
            let mut out = Vec::with_capacity(grid.values.len());
            let mut init: Option<Array1<f64>> = None;
            let mut step: Option<f64> = None;
            for &lambda in &grid.values {
                let fit = fitter.fit_with_step(lambda, init.as_ref(), step)?;
                init = Some(fit.coefficients.clone());
                step = Some(fit.step_final);
                if !fit.converged {
                    log::warn!(
                        "cross-validation: fold {fold} fit at lambda {lambda:.4e} did not converge; excluded"
                    );
                    out.push(None);
                    continue;
                }
                let mu = predict_mean(&eval, fit.coefficients.view());
                let d = df_estimate(spec, &fit.coefficients, settings.fusion_tol);
                out.push(Some(criterion_value(
                    criterion,
                    spec.family(),
                    eval.response().view(),
                    mu.view(),
                    d,
                )));
            }
            Ok(out)
        })
        .collect::<Result<Vec<_>>>()?;

    let mut mean = Vec::with_capacity(grid.values.len());
    let mut sd = Vec::with_capacity(grid.values.len());
    let mut excluded = 0usize;
    for li in 0..grid.values.len() {
        let values: Vec<f64> = per_fold.iter().filter_map(|f| f[li]).collect();
        excluded += k - values.len();
        if values.is_empty() {
            mean.push(f64::INFINITY);
            sd.push(0.0);
            continue;
        }
        let m = values.iter().sum::<f64>() / values.len() as f64;
        let var = if values.len() > 1 {
            values.iter().map(|v| (v - m) * (v - m)).sum::<f64>() / (values.len() - 1) as f64
        } else {
            0.0
        };
        mean.push(m);
        sd.push(var.sqrt());
    }

    let weights = compute_weights(spec, scheme, weight_options)?;
    let fitter = Fitter::new(spec, &weights, settings.clone())?;
    let path = fit_path(&fitter, grid)?;
    let df: Vec<usize> =
        path.iter().map(|f| df_estimate(spec, &f.coefficients, settings.fusion_tol)).collect();
    let (selected_min, selected_1se) = selections(&grid.values, &mean, &sd);
    Ok(TuningResult {
        criterion,
        lambdas: grid.values.clone(),
        mean,
        sd,
        df,
        path,
        selected_min,
        selected_1se,
        excluded_fits: excluded,
    })
}

fn selections(lambdas: &[f64], mean: &[f64], sd: &[f64]) -> (f64, f64) {
    let i_min = select_min(mean);
    let i_1se = select_1se(mean, sd);
    (lambdas[i_min], lambdas[i_1se])
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{ModelSpecBuilder, PenaltyKind};
    use approx::assert_abs_diff_eq;
    use ndarray::array;
    use rand::prelude::*;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn criterion_formulas() {
        let y = array![1.0, 0.0, 1.0, 1.0];
        let mu = array![0.8, 0.3, 0.6, 0.9];
        let ll = Family::Binomial.log_likelihood(y.view(), mu.view());
        let aic = criterion_value(Criterion::Aic, Family::Binomial, y.view(), mu.view(), 3);
        let bic = criterion_value(Criterion::Bic, Family::Binomial, y.view(), mu.view(), 3);
        let dev = criterion_value(Criterion::Deviance, Family::Binomial, y.view(), mu.view(), 3);
        assert_abs_diff_eq!(aic, -2.0 * ll + 6.0, epsilon = 1e-12);
        assert_abs_diff_eq!(dev, -2.0 * ll, epsilon = 1e-12);
        // AIC - BIC = (2 - log n) d
        assert_abs_diff_eq!(aic - bic, (2.0 - 4.0f64.ln()) * 3.0, epsilon = 1e-12);
    }

    #[test]
    fn saturated_gaussian_deviance_is_zero() {
        let y = array![1.0, 2.0, 3.0];
        let dev = criterion_value(Criterion::Deviance, Family::Gaussian, y.view(), y.view(), 3);
        assert_abs_diff_eq!(dev, 0.0, epsilon = 1e-15);
    }

    #[test]
    fn dss_poisson_exact_prediction_term() {
        // y = 1, mu = 1: residual 0 and sigma = 1 contribute exactly 0
        let y = array![1.0];
        let mu = array![1.0];
        let dss = criterion_value(Criterion::Dss, Family::Poisson, y.view(), mu.view(), 1);
        assert_abs_diff_eq!(dss, 0.0, epsilon = 1e-15);
    }

    #[test]
    fn df_counts_unique_nonzero_groups() {
        let spec = ModelSpecBuilder::new(Family::Binomial)
            .response(array![1.0, 0.0, 1.0, 0.0, 1.0, 0.0])
            .add_factor(
                "f",
                (0..4).map(|i| i.to_string()).collect(),
                &[0, 1, 2, 3, 1, 2],
                PenaltyKind::FusedLasso,
                None,
                Some(0),
            )
            .build()
            .unwrap();
        // intercept 0.2 counts; block (0.5, 0.5 + 1e-9, 0) counts one group
        let beta = array![0.2, 0.5, 0.5 + 1e-9, 0.0];
        assert_eq!(df_estimate(&spec, &beta, 1e-7), 2);
        // all-zero penalized block: intercept only
        let beta = array![0.2, 0.0, 0.0, 0.0];
        assert_eq!(df_estimate(&spec, &beta, 1e-7), 1);
    }

    #[test]
    fn stratified_folds_balance_levels() {
        let mut y = Vec::new();
        y.extend(std::iter::repeat(0.0).take(10));
        y.extend(std::iter::repeat(1.0).take(10));
        let y = Array1::from_vec(y);
        let folds = stratified_kfold(Family::Binomial, y.view(), 5, 42).unwrap();
        for fold in 0..5 {
            let rows = folds.fold_rows(fold);
            let zeros = rows.iter().filter(|&&i| y[i] == 0.0).count();
            let ones = rows.iter().filter(|&&i| y[i] == 1.0).count();
            assert_eq!(zeros, 2);
            assert_eq!(ones, 2);
        }
        // determinism
        let again = stratified_kfold(Family::Binomial, y.view(), 5, 42).unwrap();
        assert_eq!(folds.fold_of, again.fold_of);
    }

    #[test]
    fn eleven_zeros_spread_two_or_three_per_fold() {
        let mut y = vec![0.0; 11];
        y.extend(vec![1.0; 9]);
        let y = Array1::from_vec(y);
        let folds = stratified_kfold(Family::Binomial, y.view(), 5, 7).unwrap();
        for fold in 0..5 {
            let zeros = folds
                .fold_rows(fold)
                .iter()
                .filter(|&&i| y[i] == 0.0)
                .count();
            assert!(zeros == 2 || zeros == 3, "fold {fold} has {zeros} zeros");
        }
    }

    #[test]
    fn kfold_argument_validation() {
        let y = array![0.0, 1.0, 0.0, 1.0];
        assert!(stratified_kfold(Family::Binomial, y.view(), 1, 0).is_err());
        assert!(stratified_kfold(Family::Binomial, y.view(), 9, 0).is_err());
    }

    #[test]
    fn folds_are_disjoint_and_cover() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let y = Array1::from_iter((0..53).map(|_| if rng.gen::<f64>() < 0.4 { 1.0 } else { 0.0 }));
        let folds = stratified_kfold(Family::Binomial, y.view(), 4, 3).unwrap();
        let mut seen = vec![false; 53];
        for fold in 0..4 {
            for i in folds.fold_rows(fold) {
                assert!(!seen[i]);
                seen[i] = true;
            }
        }
        assert!(seen.iter().all(|&s| s));
    }

    #[test]
    fn grid_is_monotone_decreasing_with_count_values() {
        let grid = LambdaGrid::log_spaced(10.0, 1e-4, 50).unwrap();
        assert_eq!(grid.values.len(), 50);
        for pair in grid.values.windows(2) {
            assert!(pair[1] < pair[0]);
        }
        assert_abs_diff_eq!(grid.values[0], 10.0, epsilon = 1e-12);
        assert_abs_diff_eq!(grid.values[49], 10.0 * 1e-4, epsilon = 1e-12);
    }

    #[test]
    fn constant_ratio_grid_rejected() {
        assert!(LambdaGrid::log_spaced(1.0, 1.0, 10).is_err());
    }

    #[test]
    fn one_se_rules() {
        // constant criterion: the 1se rule selects the largest lambda
        let mean = vec![1.0, 1.0, 1.0];
        let sd = vec![0.1, 0.1, 0.1];
        assert_eq!(select_1se(&mean, &sd), 0);
        // zero sd at the minimum: 1se equals min
        let mean = vec![3.0, 2.0, 1.0];
        let sd = vec![0.0, 0.0, 0.0];
        assert_eq!(select_1se(&mean, &sd), select_min(&mean));
    }

    #[test]
    fn mspe_and_sse_selection_agree() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let n_lambda = 12;
        let y = Array1::from_iter((0..40).map(|_| rng.gen_range(0.0..1.0)));
        let mut mspe = Vec::new();
        let mut sse = Vec::new();
        for _ in 0..n_lambda {
            let mu = Array1::from_iter((0..40).map(|_| rng.gen_range(0.0..1.0)));
            mspe.push(criterion_value(
                Criterion::Mspe,
                Family::Gaussian,
                y.view(),
                mu.view(),
                1,
            ));
            sse.push(y.iter().zip(&mu).map(|(y, m)| (y - m) * (y - m)).sum::<f64>());
        }
        let argmin = |v: &[f64]| {
            v.iter().enumerate().min_by(|a, b| a.1.partial_cmp(b.1).unwrap()).unwrap().0
        };
        assert_eq!(argmin(&mspe), argmin(&sse));
    }
}
