//! The outer optimization loop: accelerated proximal gradient descent with
//! backtracking line search, adaptive restarts and a relative-objective
//! stopping rule. Each iteration takes a gradient step on the smooth loss at
//! the acceleration point and then applies every block's proximal operator
//! exactly (identity / soft thresholding / group soft thresholding / ADMM).

use std::ops::Range;

use ndarray::Array1;

use crate::admm::{build_eigen_cache, prox_gen_fused, AdmmSettings, EigenCache};
use crate::error::{Error, Result};
use crate::family::loss;
use crate::linops::HybridDesign;
use crate::model::{ModelSpec, PenaltyKind};
use crate::penalty_matrix::{build_graph_matrix, PenaltyMatrix};
use crate::prox::{group_soft_threshold, soft_threshold_scalar};
use crate::standardize::{
    destandardize_coefficients, standardize_coefficients, standardize_columns,
    StandardizationRecord,
};
use crate::weights::PenaltyWeights;

/// Outer-loop parameters. Defaults follow the reference parameter table:
/// relative tolerance 1e-8, at most 10^4 iterations, backtracking factor 0.5
/// and initial step size `0.1 * n` (the loss carries a 1/n factor, so the
/// natural step scale grows with n).
#[derive(Debug, Clone)]
pub struct SolverSettings {
    /// Relative stopping tolerance on the objective.
    pub eps: f64,
    pub max_iter: usize,
    /// Backtracking shrink factor, in (0, 1).
    pub tau: f64,
    /// Initial step size; `None` means `0.1 * n`.
    pub step_init: Option<f64>,
    /// Below this step size backtracking is suspended.
    pub step_floor: f64,
    /// Center and scale Lasso / Group Lasso columns before fitting.
    pub standardize: bool,
    /// Tolerance for reporting exact zeros and fused levels.
    pub fusion_tol: f64,
    pub admm: AdmmSettings,
}

impl Default for SolverSettings {
    fn default() -> Self {
        Self {
            eps: 1e-8,
            max_iter: 10_000,
            tau: 0.5,
            step_init: None,
            step_floor: 1e-14,
            standardize: true,
            fusion_tol: 1e-7,
            admm: AdmmSettings::default(),
        }
    }
}

impl SolverSettings {
    fn validate(&self) -> Result<()> {
        if !(self.tau > 0.0 && self.tau < 1.0) {
            return Err(Error::InvalidArgument(format!(
                "backtracking factor tau must lie in (0, 1), got {}",
                self.tau
            )));
        }
        if self.eps < 0.0 || self.step_floor <= 0.0 {
            return Err(Error::InvalidArgument(
                "eps must be nonnegative and step_floor positive".into(),
            ));
        }
        self.admm.validate()
    }
}

/// One accepted outer iteration, for trace reporting.
#[derive(Debug, Clone, Copy)]
pub struct IterationRecord {
    pub iteration: usize,
    pub objective: f64,
    pub step: f64,
    /// Cumulative restart count.
    pub restarts: usize,
}

/// A converged (or max-iteration) fit.
#[derive(Debug, Clone)]
pub struct FitResult {
    /// Coefficients on the original data scale, intercept first.
    pub coefficients: Array1<f64>,
    /// Final objective of the optimized (standardized-scale) problem.
    pub objective: f64,
    /// Scaled loss at the solution.
    pub loss: f64,
    /// `lambda * sum_j g_j` at the solution.
    pub penalty: f64,
    /// Weighted penalty value `g_j` per block.
    pub per_block_penalty: Vec<f64>,
    pub lambda: f64,
    pub iterations: usize,
    pub converged: bool,
    pub step_final: f64,
    pub restarts: usize,
    /// Fused-penalty proximal solves that hit the ADMM iteration cap.
    pub admm_nonconverged: usize,
    /// Total ADMM iterations over all fused-penalty proximal solves.
    pub admm_iterations: usize,
    pub trace: Vec<IterationRecord>,
}

enum BlockProx {
    Identity,
    SoftThreshold { weights: Vec<f64> },
    GroupSoftThreshold { weight: f64 },
    Admm { matrix: PenaltyMatrix, cache: EigenCache },
}

struct BlockSolver {
    range: Range<usize>,
    prox: BlockProx,
}

/// A model prepared for fitting: standardization applied, penalty matrices
/// and their eigendecompositions built once, weights bound. Repeated fits
/// across a lambda grid reuse all of it.
pub struct Fitter {
    spec: ModelSpec,
    record: StandardizationRecord,
    blocks: Vec<BlockSolver>,
    settings: SolverSettings,
    /// Sparse/dense split of the (standardized) design for fast linear
    /// predictors and gradients.
    hybrid: HybridDesign,
}

impl Fitter {
    pub fn new(
        spec: &ModelSpec,
        weights: &PenaltyWeights,
        settings: SolverSettings,
    ) -> Result<Self> {
        settings.validate()?;
        weights.validate(spec)?;

        let (fit_spec, record) = if settings.standardize {
            standardize_columns(spec)?
        } else {
            (spec.clone(), StandardizationRecord::identity(spec.p()))
        };

        let mut blocks = Vec::with_capacity(spec.blocks().len());
        for (block, w) in spec.blocks().iter().zip(&weights.per_block) {
            let prox = match block.penalty {
                PenaltyKind::None => BlockProx::Identity,
                PenaltyKind::Lasso => BlockProx::SoftThreshold { weights: w.clone() },
                PenaltyKind::GroupLasso => BlockProx::GroupSoftThreshold { weight: w[0] },
                PenaltyKind::FusedLasso | PenaltyKind::GeneralizedFusedLasso => {
                    let graph = block.graph.as_ref().expect("fused block carries a graph");
                    let reference = block.levels.as_ref().and_then(|l| l.reference);
                    let matrix = build_graph_matrix(graph, w, reference)?;
                    let cache = build_eigen_cache(&matrix)?;
                    BlockProx::Admm { matrix, cache }
                }
            };
            blocks.push(BlockSolver { range: block.coef_range.clone(), prox });
        }

        let hybrid = HybridDesign::from_matrix(&fit_spec.design().values);
        Ok(Self { spec: fit_spec, record, blocks, settings, hybrid })
    }

    fn eta_of(&self, beta: &Array1<f64>) -> Array1<f64> {
        self.hybrid.linear_predictor(
            beta[0],
            beta.slice(ndarray::s![1..]),
            &self.spec.design().offset,
        )
    }

    fn loss_from_eta(&self, eta: &Array1<f64>) -> f64 {
        let family = self.spec.family();
        let total: f64 = self
            .spec
            .response()
            .iter()
            .zip(eta)
            .map(|(&y, &e)| family.loss_term(y, e))
            .sum();
        total / self.spec.n() as f64
    }

    fn gradient_from_eta(&self, eta: &Array1<f64>) -> Array1<f64> {
        let family = self.spec.family();
        let mut resid = eta.mapv(|e| family.mean_from_eta(e));
        resid -= self.spec.response();
        let mut grad = self.hybrid.transpose_dot_with_intercept(&resid);
        grad /= self.spec.n() as f64;
        grad
    }

    pub fn settings(&self) -> &SolverSettings {
        &self.settings
    }

    /// The spec the optimization runs on (standardized scale).
    pub fn internal_spec(&self) -> &ModelSpec {
        &self.spec
    }

    /// `sum_j g_j(beta_j)` with the bound weights, plus the per-block values.
    fn penalty_values(&self, beta: &Array1<f64>) -> (f64, Vec<f64>) {
        let mut per_block = Vec::with_capacity(self.blocks.len());
        let mut total = 0.0;
        for block in &self.blocks {
            let b = beta.slice(ndarray::s![block.range.clone()]);
            let g = match &block.prox {
                BlockProx::Identity => 0.0,
                BlockProx::SoftThreshold { weights } => {
                    b.iter().zip(weights).map(|(v, w)| w * v.abs()).sum()
                }
                BlockProx::GroupSoftThreshold { weight } => {
                    weight * b.iter().map(|v| v * v).sum::<f64>().sqrt()
                }
                BlockProx::Admm { matrix, .. } => matrix.l1_of_product(b),
            };
            per_block.push(g);
            total += g;
        }
        (total, per_block)
    }

    /// Blockwise proximal map of `beta_tilde` with parameter `slambda`;
    /// `warm` seeds the ADMM blocks. Returns the new point, the number of
    /// fused blocks whose ADMM hit the iteration cap and the total ADMM
    /// iterations spent.
    fn prox_step(
        &self,
        beta_tilde: &Array1<f64>,
        slambda: f64,
        warm: &Array1<f64>,
    ) -> (Array1<f64>, usize, usize) {
        let mut out = Array1::zeros(beta_tilde.len());
        let mut admm_failures = 0;
        let mut admm_iterations = 0;
        for block in &self.blocks {
            let range = block.range.clone();
            let tilde = beta_tilde.slice(ndarray::s![range.clone()]);
            match &block.prox {
                BlockProx::Identity => {
                    out.slice_mut(ndarray::s![range]).assign(&tilde);
                }
                BlockProx::SoftThreshold { weights } => {
                    let mut dst = out.slice_mut(ndarray::s![range]);
                    for ((d, &x), w) in dst.iter_mut().zip(tilde.iter()).zip(weights) {
                        *d = soft_threshold_scalar(x, w * slambda);
                    }
                }
                BlockProx::GroupSoftThreshold { weight } => {
                    let z = group_soft_threshold(tilde, weight * slambda)
                        .expect("threshold is nonnegative");
                    out.slice_mut(ndarray::s![range]).assign(&z);
                }
                BlockProx::Admm { matrix, cache } => {
                    let warm_block = warm.slice(ndarray::s![range.clone()]).to_owned();
                    let outcome = prox_gen_fused(
                        &tilde.to_owned(),
                        matrix,
                        slambda,
                        cache,
                        &self.settings.admm,
                        &warm_block,
                    );
                    if !outcome.converged {
                        admm_failures += 1;
                    }
                    admm_iterations += outcome.iterations;
                    out.slice_mut(ndarray::s![range]).assign(&outcome.x);
                }
            }
        }
        (out, admm_failures, admm_iterations)
    }

    /// Objective of the internal (standardized) problem.
    pub fn objective_internal(&self, beta_std: &Array1<f64>, lambda: f64) -> f64 {
        loss(&self.spec, beta_std.view()) + lambda * self.penalty_values(beta_std).0
    }

    /// Objective evaluated for original-scale coefficients (as stored in a
    /// `FitResult`), by mapping them onto the standardized scale first.
    pub fn objective_original(&self, beta: &Array1<f64>, lambda: f64) -> Result<f64> {
        let beta_std = standardize_coefficients(beta, &self.record)?;
        Ok(self.objective_internal(&beta_std, lambda))
    }

    pub fn fit(&self, lambda: f64, init: Option<&Array1<f64>>) -> Result<FitResult> {
        self.fit_with_step(lambda, init, None)
    }

    /// Fit with a warm start and optionally a step size carried over from a
    /// neighbouring fit (the step only ever shrinks within one fit).
    pub fn fit_with_step(
        &self,
        lambda: f64,
        init: Option<&Array1<f64>>,
        step_init: Option<f64>,
    ) -> Result<FitResult> {
        if !(lambda.is_finite() && lambda >= 0.0) {
            return Err(Error::InvalidArgument(format!("lambda must be >= 0, got {lambda}")));
        }
        let n_coef = self.spec.n_coefficients();
        let mut beta_prev = match init {
            Some(b) => {
                if b.iter().any(|v| !v.is_finite()) {
                    return Err(Error::InvalidArgument("initial coefficients not finite".into()));
                }
                standardize_coefficients(b, &self.record)?
            }
            None => Array1::zeros(n_coef),
        };

        let settings = &self.settings;
        let mut step = step_init
            .or(settings.step_init)
            .unwrap_or(0.1 * self.spec.n() as f64);
        let mut theta = beta_prev.clone();
        let mut alpha = 1.0f64;
        let mut obj_prev = {
            let eta = self.eta_of(&beta_prev);
            let v = self.loss_from_eta(&eta) + lambda * self.penalty_values(&beta_prev).0;
            if !v.is_finite() {
                return Err(Error::Numerical("objective not finite at the initial point".into()));
            }
            v
        };

        let mut trace = Vec::new();
        let mut restarts = 0usize;
        let mut admm_nonconverged = 0usize;
        let mut admm_iterations = 0usize;
        let mut converged = false;
        let mut iterations = 0usize;
        let mut beta_curr = beta_prev.clone();
        let mut obj_curr = obj_prev;

        for k in 1..=settings.max_iter {
            iterations = k;
            let eta_theta = self.eta_of(&theta);
            let grad = self.gradient_from_eta(&eta_theta);
            let f_theta = self.loss_from_eta(&eta_theta);

            // Backtracking: shrink the step while the quadratic majorization
            // at theta is violated (the penalty term appears on both sides
            // and cancels), suspended once the step falls below the floor.
            let (mut beta_new, mut fails, mut prox_iters) = {
                let tilde = &theta - &(&grad * step);
                self.prox_step(&tilde, step * lambda, &beta_prev)
            };
            let mut f_new;
            loop {
                f_new = self.loss_from_eta(&self.eta_of(&beta_new));
                let delta = &beta_new - &theta;
                let bound = f_theta
                    + delta.iter().zip(&grad).map(|(d, g)| d * g).sum::<f64>()
                    + delta.iter().map(|d| d * d).sum::<f64>() / (2.0 * step);
                if f_new <= bound + 1e-12 * bound.abs().max(1.0) || step < settings.step_floor {
                    break;
                }
                step *= settings.tau;
                let tilde = &theta - &(&grad * step);
                let (b, f, it) = self.prox_step(&tilde, step * lambda, &beta_prev);
                beta_new = b;
                fails = f;
                prox_iters += it;
            }
            admm_nonconverged += fails;
            admm_iterations += prox_iters;

            let (pen_new, _) = self.penalty_values(&beta_new);
            let mut obj_new = f_new + lambda * pen_new;
            if !obj_new.is_finite() || beta_new.iter().any(|v| !v.is_finite()) {
                return Err(Error::Numerical(format!(
                    "objective became non-finite at iteration {k} (step {step:.3e})"
                )));
            }

            // Relative change of the raw candidate; a restart only fires when
            // the objective grew by more than the stopping tolerance, so a
            // restart iteration can never satisfy the stopping rule.
            let rel_change = (obj_new - obj_prev).abs() / obj_prev.abs().max(1e-12);
            let restarted = obj_new > obj_prev * (1.0 + settings.eps);
            if restarted {
                beta_new = beta_prev.clone();
                obj_new = obj_prev;
                alpha = 0.0;
                restarts += 1;
            }

            trace.push(IterationRecord { iteration: k, objective: obj_new, step, restarts });

            // Nesterov acceleration on the accepted iterate.
            let alpha_next = (1.0 + (1.0 + 4.0 * alpha * alpha).sqrt()) / 2.0;
            let momentum = (alpha - 1.0) / alpha_next;
            theta = &beta_new + &((&beta_new - &beta_prev) * momentum);
            alpha = alpha_next;

            beta_curr = beta_new.clone();
            obj_curr = obj_new;
            beta_prev = beta_new;
            obj_prev = obj_new;

            if !restarted && rel_change <= settings.eps {
                converged = true;
                break;
            }
        }

        let (pen_total, per_block_penalty) = self.penalty_values(&beta_curr);
        let final_loss = self.loss_from_eta(&self.eta_of(&beta_curr));
        let coefficients = destandardize_coefficients(&beta_curr, &self.record)?;

        Ok(FitResult {
            coefficients,
            objective: obj_curr,
            loss: final_loss,
            penalty: lambda * pen_total,
            per_block_penalty,
            lambda,
            iterations,
            converged,
            step_final: step,
            restarts,
            admm_nonconverged,
            admm_iterations,
            trace,
        })
    }
}

/// Convenience entry point: prepare and run a single fit.
pub fn smurf_fit(
    spec: &ModelSpec,
    lambda: f64,
    weights: &PenaltyWeights,
    settings: SolverSettings,
    init: Option<&Array1<f64>>,
) -> Result<FitResult> {
    Fitter::new(spec, weights, settings)?.fit(lambda, init)
}

/// The regularized objective `f(beta) + lambda * sum_j g_j(beta_j)` evaluated
/// directly on the given spec (no standardization), with the intercept block
/// unpenalized. Weight layout per block as in [`PenaltyWeights`].
pub fn objective(
    spec: &ModelSpec,
    beta: &Array1<f64>,
    lambda: f64,
    weights: &PenaltyWeights,
) -> Result<f64> {
    weights.validate(spec)?;
    if beta.len() != spec.n_coefficients() {
        return Err(Error::ShapeMismatch(format!(
            "beta has {} entries, spec needs {}",
            beta.len(),
            spec.n_coefficients()
        )));
    }
    if beta.iter().any(|v| !v.is_finite()) {
        return Err(Error::InvalidArgument("beta contains non-finite values".into()));
    }
    let mut penalty = 0.0;
    for (block, w) in spec.blocks().iter().zip(&weights.per_block) {
        let b = spec.block_coefficients(block, beta);
        penalty += match block.penalty {
            PenaltyKind::None => 0.0,
            PenaltyKind::Lasso => b.iter().zip(w).map(|(v, w)| w * v.abs()).sum(),
            PenaltyKind::GroupLasso => w[0] * b.iter().map(|v| v * v).sum::<f64>().sqrt(),
            PenaltyKind::FusedLasso | PenaltyKind::GeneralizedFusedLasso => {
                let graph = block.graph.as_ref().expect("fused block carries a graph");
                let reference = block.levels.as_ref().and_then(|l| l.reference);
                build_graph_matrix(graph, w, reference)?.l1_of_product(b)
            }
        };
    }
    Ok(loss(spec, beta.view()) + lambda * penalty)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::family::{irls_fit, Family};
    use crate::model::{ModelSpecBuilder, PenaltyKind};
    use crate::weights::PenaltyWeights;
    use approx::assert_abs_diff_eq;
    use ndarray::Array2;
    use rand::prelude::*;
    use rand_chacha::ChaCha8Rng;

    fn gaussian_lasso_spec(n: usize, p: usize, seed: u64) -> ModelSpec {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let cols: Vec<(String, Array1<f64>)> = (0..p)
            .map(|j| {
                (format!("x{j}"), Array1::from_iter((0..n).map(|_| rng.gen_range(-1.0..1.0))))
            })
            .collect();
        let beta: Vec<f64> = (0..=p).map(|_| rng.gen_range(-1.0f64..1.0)).collect();
        let mut y = Array1::from_elem(n, beta[0]);
        for j in 0..p {
            y.zip_mut_with(&cols[j].1, |yy, x| *yy += beta[j + 1] * x);
        }
        y.mapv_inplace(|v| v + 0.05 * rng.gen_range(-1.0..1.0));
        ModelSpecBuilder::new(Family::Gaussian)
            .response(y)
            .add_numeric("x", cols, PenaltyKind::Lasso)
            .build()
            .unwrap()
    }

    #[test]
    fn objective_at_lambda_zero_is_loss() {
        let spec = gaussian_lasso_spec(30, 3, 1);
        let w = PenaltyWeights::equal(&spec);
        let beta = Array1::from_elem(4, 0.3);
        let obj = objective(&spec, &beta, 0.0, &w).unwrap();
        assert_abs_diff_eq!(obj, crate::family::loss(&spec, beta.view()), epsilon = 1e-15);
    }

    #[test]
    fn objective_zero_beta_has_zero_penalty() {
        let spec = gaussian_lasso_spec(30, 3, 2);
        let w = PenaltyWeights::equal(&spec);
        let beta = Array1::zeros(4);
        let with_pen = objective(&spec, &beta, 5.0, &w).unwrap();
        let without = objective(&spec, &beta, 0.0, &w).unwrap();
        assert_abs_diff_eq!(with_pen, without, epsilon = 1e-15);
    }

    #[test]
    fn objective_matches_manual_formula() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let spec = ModelSpecBuilder::new(Family::Binomial)
            .response(ndarray::array![1.0, 0.0, 1.0, 1.0, 0.0, 1.0])
            .add_factor(
                "f",
                vec!["a".into(), "b".into(), "c".into()],
                &[0, 1, 2, 1, 0, 2],
                PenaltyKind::FusedLasso,
                None,
                Some(0),
            )
            .add_numeric(
                "x",
                vec![("x".into(), Array1::from_iter((0..6).map(|_| rng.gen_range(-1.0..1.0))))],
                PenaltyKind::Lasso,
            )
            .build()
            .unwrap();
        let weights = PenaltyWeights {
            per_block: vec![vec![], vec![0.7, 1.3], vec![2.0]],
        };
        let beta = ndarray::array![0.2, 0.5, -0.4, 0.9];
        let lambda = 0.31;
        // fused block levels: (0 [ref], 0.5, -0.4); chain differences
        let manual_pen = 0.7 * (0.5f64 - 0.0).abs() + 1.3 * (-0.4f64 - 0.5).abs() + 2.0 * 0.9;
        let expected = crate::family::loss(&spec, beta.view()) + lambda * manual_pen;
        assert_abs_diff_eq!(
            objective(&spec, &beta, lambda, &weights).unwrap(),
            expected,
            epsilon = 1e-12
        );
    }

    #[test]
    fn lambda_zero_matches_irls_gaussian() {
        let spec = gaussian_lasso_spec(200, 5, 4);
        let w = PenaltyWeights::equal(&spec);
        let mut settings = SolverSettings::default();
        settings.eps = 1e-13;
        settings.max_iter = 50_000;
        let fit = smurf_fit(&spec, 0.0, &w, settings, None).unwrap();
        assert!(fit.converged);
        let direct = irls_fit(&spec, 0.0).unwrap();
        for j in 0..spec.n_coefficients() {
            let scale = direct.coefficients[j].abs().max(1.0);
            assert!(
                (fit.coefficients[j] - direct.coefficients[j]).abs() / scale < 1e-6,
                "coef {j}: {} vs {}",
                fit.coefficients[j],
                direct.coefficients[j]
            );
        }
    }

    #[test]
    fn huge_lambda_collapses_to_intercept_only() {
        let spec = gaussian_lasso_spec(100, 4, 5);
        let w = PenaltyWeights::equal(&spec);
        let mut settings = SolverSettings::default();
        settings.eps = 1e-12;
        let fit = smurf_fit(&spec, 1e6, &w, settings, None).unwrap();
        for j in 1..spec.n_coefficients() {
            assert!(fit.coefficients[j].abs() < 1e-10, "coef {j} = {}", fit.coefficients[j]);
        }
        // objective equals the intercept-only loss
        let mut b0 = Array1::zeros(spec.n_coefficients());
        b0[0] = spec.response().mean().unwrap();
        let intercept_loss = crate::family::loss(&spec, b0.view());
        assert_abs_diff_eq!(fit.objective, intercept_loss, epsilon = 1e-8);
    }

    /// Gaussian lasso with centered orthonormal design columns: the exact
    /// solution is `soft_threshold(x_j^T y, n * lambda)` coordinatewise with
    /// the response mean as intercept.
    fn orthonormal_instance(
        n: usize,
        p: usize,
        seed: u64,
        lambda: f64,
    ) -> (ModelSpec, Array1<f64>) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        // random matrix -> center columns -> orthonormalize via Gram-Schmidt
        let mut m = Array2::from_shape_fn((n, p), |_| rng.gen_range(-1.0f64..1.0));
        for j in 0..p {
            let mean = m.column(j).sum() / n as f64;
            m.column_mut(j).mapv_inplace(|v| v - mean);
        }
        for j in 0..p {
            for i in 0..j {
                let proj = m.column(j).dot(&m.column(i));
                let prev = m.column(i).to_owned();
                m.column_mut(j).zip_mut_with(&prev, |a, b| *a -= proj * b);
            }
            let norm = m.column(j).dot(&m.column(j)).sqrt();
            m.column_mut(j).mapv_inplace(|v| v / norm);
        }
        let y = Array1::from_iter((0..n).map(|_| rng.gen_range(-2.0f64..2.0)));
        let cols: Vec<(String, Array1<f64>)> =
            (0..p).map(|j| (format!("x{j}"), m.column(j).to_owned())).collect();
        let spec = ModelSpecBuilder::new(Family::Gaussian)
            .response(y.clone())
            .add_numeric("x", cols, PenaltyKind::Lasso)
            .build()
            .unwrap();
        let mut exact = Array1::zeros(p + 1);
        exact[0] = y.sum() / n as f64;
        for j in 0..p {
            let c = m.column(j).dot(&y);
            exact[j + 1] = soft_threshold_scalar(c, n as f64 * lambda);
        }
        (spec, exact)
    }

    #[test]
    fn orthonormal_design_matches_soft_thresholded_least_squares() {
        let lambda = 0.01;
        let (spec, exact) = orthonormal_instance(20, 3, 6, lambda);
        let w = PenaltyWeights::equal(&spec);
        let mut settings = SolverSettings::default();
        settings.standardize = false;
        settings.eps = 1e-14;
        settings.max_iter = 100_000;
        let fit = smurf_fit(&spec, lambda, &w, settings, None).unwrap();
        for j in 0..spec.n_coefficients() {
            assert_abs_diff_eq!(fit.coefficients[j], exact[j], epsilon = 1e-6);
        }
    }

    #[test]
    fn accepted_objectives_never_increase_beyond_tolerance() {
        let spec = gaussian_lasso_spec(150, 6, 7);
        let w = PenaltyWeights::equal(&spec);
        let fit = smurf_fit(&spec, 0.02, &w, SolverSettings::default(), None).unwrap();
        let eps = SolverSettings::default().eps;
        for pair in fit.trace.windows(2) {
            assert!(pair[1].objective <= pair[0].objective * (1.0 + eps));
        }
    }

    #[test]
    fn refitting_from_solution_stops_within_two_iterations() {
        // exact optimum from the orthonormal-design closed form; a fit
        // started there is at a fixed point of the prox-gradient map
        let (spec, exact) = orthonormal_instance(24, 3, 8, 0.02);
        let w = PenaltyWeights::equal(&spec);
        let mut settings = SolverSettings::default();
        settings.standardize = false;
        let fitter = Fitter::new(&spec, &w, settings).unwrap();
        let refit = fitter.fit(0.02, Some(&exact)).unwrap();
        assert!(refit.converged);
        assert!(refit.iterations <= 2, "took {} iterations", refit.iterations);
        for j in 0..spec.n_coefficients() {
            assert_abs_diff_eq!(refit.coefficients[j], exact[j], epsilon = 1e-8);
        }
    }

    #[test]
    fn warm_and_cold_starts_reach_the_same_objective() {
        let spec = gaussian_lasso_spec(120, 5, 9);
        let w = PenaltyWeights::equal(&spec);
        let fitter = Fitter::new(&spec, &w, SolverSettings::default()).unwrap();
        let cold = fitter.fit(0.03, None).unwrap();
        let mut perturbed = cold.coefficients.clone();
        let mut rng = ChaCha8Rng::seed_from_u64(10);
        perturbed.mapv_inplace(|v| v + 0.3 * rng.gen_range(-1.0..1.0));
        let warm = fitter.fit(0.03, Some(&perturbed)).unwrap();
        assert!((cold.objective - warm.objective).abs() < 1e-6);
    }

    #[test]
    fn objective_bounded_by_unpenalized_fit_plus_penalty() {
        let spec = gaussian_lasso_spec(100, 5, 11);
        let w = PenaltyWeights::equal(&spec);
        let irls = irls_fit(&spec, 0.0).unwrap();
        for lambda in [0.0, 0.01, 0.5, 10.0] {
            let fit = smurf_fit(&spec, lambda, &w, SolverSettings::default(), None).unwrap();
            let bound = objective(&spec, &irls.coefficients, lambda, &w).unwrap();
            assert!(
                fit.objective <= bound + 1e-8,
                "lambda {lambda}: {} > {}",
                fit.objective,
                bound
            );
        }
    }

    #[test]
    fn restart_and_acceleration_updates() {
        // alpha = 0 -> next alpha = 1, theta = beta; alpha = 1 -> golden step
        let a0 = 0.0f64;
        let a1 = (1.0 + (1.0 + 4.0 * a0 * a0).sqrt()) / 2.0;
        assert_abs_diff_eq!(a1, 1.0, epsilon = 1e-15);
        let a2 = (1.0 + (1.0 + 4.0f64).sqrt()) / 2.0;
        assert_abs_diff_eq!(a2, (1.0 + 5.0f64.sqrt()) / 2.0, epsilon = 1e-15);
    }

    #[test]
    fn equal_consecutive_objectives_stop_without_restart() {
        // a fit started at its own solution neither restarts nor loops
        let spec = gaussian_lasso_spec(80, 3, 12);
        let w = PenaltyWeights::equal(&spec);
        let fitter = Fitter::new(&spec, &w, SolverSettings::default()).unwrap();
        let fit = fitter.fit(0.1, None).unwrap();
        let refit = fitter.fit(0.1, Some(&fit.coefficients)).unwrap();
        assert_eq!(refit.restarts, 0);
        assert!(refit.converged);
    }
}
