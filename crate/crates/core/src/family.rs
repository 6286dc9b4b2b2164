//! Loss functions, gradients, mean predictions and an unpenalized
//! (optionally ridge-stabilized) Newton/IRLS fitter for the three
//! exponential-family models under their canonical links.
//!
//! The solver minimizes the *scaled* negative log-likelihood (a `1/n` factor
//! is included); the tuning criteria use the unscaled log-likelihood. For the
//! Gaussian family the scaled loss is the least-squares criterion
//! `(1/2n)||y - eta||^2` and the reported log-likelihood is the
//! unit-dispersion form `-1/2 sum (y - mu)^2` with constants dropped, so the
//! deviance of a perfect fit is 0.

use ndarray::{Array1, Array2, ArrayView1, ArrayView2, Axis};
use statrs::function::gamma::ln_gamma;

use crate::error::{Error, Result};
use crate::model::ModelSpec;

/// Linear predictors beyond this magnitude are clamped before
/// exponentiation; the binomial and Poisson likelihood contributions are
/// numerically saturated there and the clamp prevents overflow.
pub const LINEAR_PREDICTOR_CLAMP: f64 = 30.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Family {
    /// Identity link, least-squares loss.
    Gaussian,
    /// Logit link, responses in {0, 1}.
    Binomial,
    /// Log link, nonnegative integer responses, offset = log exposure.
    Poisson,
}

impl Family {
    pub fn name(&self) -> &'static str {
        match self {
            Family::Gaussian => "gaussian",
            Family::Binomial => "binomial",
            Family::Poisson => "poisson",
        }
    }

    pub fn validate_response(&self, y: ArrayView1<f64>) -> Result<()> {
        if y.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidSpec("response contains non-finite values".into()));
        }
        match self {
            Family::Gaussian => Ok(()),
            Family::Binomial => {
                if y.iter().any(|&v| v != 0.0 && v != 1.0) {
                    return Err(Error::InvalidSpec(
                        "binomial response must take values in {0, 1}".into(),
                    ));
                }
                Ok(())
            }
            Family::Poisson => {
                if y.iter().any(|&v| v < 0.0 || v.fract() != 0.0) {
                    return Err(Error::InvalidSpec(
                        "poisson response must be a nonnegative integer count".into(),
                    ));
                }
                Ok(())
            }
        }
    }

    /// Mean from a linear predictor (already including any offset).
    pub fn mean_from_eta(&self, eta: f64) -> f64 {
        match self {
            Family::Gaussian => eta,
            Family::Binomial => {
                let e = eta.clamp(-LINEAR_PREDICTOR_CLAMP, LINEAR_PREDICTOR_CLAMP);
                1.0 / (1.0 + (-e).exp())
            }
            Family::Poisson => {
                eta.clamp(-LINEAR_PREDICTOR_CLAMP, LINEAR_PREDICTOR_CLAMP).exp()
            }
        }
    }

    /// Per-observation contribution to the scaled loss (without the 1/n).
    pub(crate) fn loss_term(&self, y: f64, eta: f64) -> f64 {
        match self {
            Family::Gaussian => 0.5 * (y - eta) * (y - eta),
            Family::Binomial => {
                let e = eta.clamp(-LINEAR_PREDICTOR_CLAMP, LINEAR_PREDICTOR_CLAMP);
                // -(y*eta - log(1 + exp(eta)))
                let softplus = if e > 0.0 { e + (-e).exp().ln_1p() } else { e.exp().ln_1p() };
                softplus - y * e
            }
            Family::Poisson => {
                let e = eta.clamp(-LINEAR_PREDICTOR_CLAMP, LINEAR_PREDICTOR_CLAMP);
                // -(y*eta - exp(eta) - log(y!))
                e.exp() - y * e + ln_gamma(y + 1.0)
            }
        }
    }

    /// Variance function V(mu) under the canonical link; also the IRLS
    /// working weight.
    fn variance(&self, mu: f64) -> f64 {
        match self {
            Family::Gaussian => 1.0,
            Family::Binomial => mu * (1.0 - mu),
            Family::Poisson => mu,
        }
    }

    /// Unscaled log-likelihood of predictions `mu` (Gaussian: unit
    /// dispersion, additive constants dropped).
    pub fn log_likelihood(&self, y: ArrayView1<f64>, mu: ArrayView1<f64>) -> f64 {
        debug_assert_eq!(y.len(), mu.len());
        match self {
            Family::Gaussian => {
                -0.5 * y.iter().zip(mu).map(|(y, m)| (y - m) * (y - m)).sum::<f64>()
            }
            Family::Binomial => y
                .iter()
                .zip(mu)
                .map(|(&y, &m)| y * m.ln() + (1.0 - y) * (1.0 - m).ln())
                .sum(),
            Family::Poisson => y
                .iter()
                .zip(mu)
                .map(|(&y, &m)| y * m.ln() - m - ln_gamma(y + 1.0))
                .sum(),
        }
    }
}

/// Scaled negative log-likelihood `f(beta)` (the `1/n` factor is included).
pub fn loss(spec: &ModelSpec, beta: ArrayView1<f64>) -> f64 {
    let eta = spec.linear_predictor(beta);
    let y = spec.response();
    let family = spec.family();
    let total: f64 = y.iter().zip(&eta).map(|(&y, &e)| family.loss_term(y, e)).sum();
    total / spec.n() as f64
}

/// Gradient of the scaled loss: `(1/n) [1 X]^T (mu - y)`, intercept first.
pub fn gradient(spec: &ModelSpec, beta: ArrayView1<f64>) -> Array1<f64> {
    let mu = predict_mean(spec, beta);
    gradient_from_mean(spec, &mu)
}

pub(crate) fn gradient_from_mean(spec: &ModelSpec, mu: &Array1<f64>) -> Array1<f64> {
    let n = spec.n() as f64;
    let resid = mu - spec.response();
    let mut grad = Array1::zeros(spec.n_coefficients());
    grad[0] = resid.sum() / n;
    let tail = spec.design().values.t().dot(&resid) / n;
    grad.slice_mut(ndarray::s![1..]).assign(&tail);
    grad
}

/// Fitted means `mu` on the response scale (offset included).
pub fn predict_mean(spec: &ModelSpec, beta: ArrayView1<f64>) -> Array1<f64> {
    let family = spec.family();
    let mut eta = spec.linear_predictor(beta);
    eta.mapv_inplace(|e| family.mean_from_eta(e));
    eta
}

/// Result of an unpenalized / ridge-stabilized fit.
#[derive(Debug, Clone)]
pub struct IrlsFit {
    pub coefficients: Array1<f64>,
    pub iterations: usize,
    pub converged: bool,
    pub gradient_norm: f64,
}

/// Fit the GLM by Newton iteration on the scaled loss plus
/// `(ridge/2)||beta_{-0}||^2` (intercept unpenalized). With `ridge = 0` the
/// design must have full column rank.
pub fn irls_fit(spec: &ModelSpec, ridge: f64) -> Result<IrlsFit> {
    if !(ridge.is_finite() && ridge >= 0.0) {
        return Err(Error::InvalidArgument(format!("ridge penalty must be >= 0, got {ridge}")));
    }
    irls_core(
        spec.family(),
        spec.design().values.view(),
        spec.response().view(),
        spec.design().offset.view(),
        ridge,
    )
}

/// IRLS on raw arrays; `x` carries no intercept column (one is implied).
pub(crate) fn irls_core(
    family: Family,
    x: ArrayView2<f64>,
    y: ArrayView1<f64>,
    offset: ArrayView1<f64>,
    ridge: f64,
) -> Result<IrlsFit> {
    const MAX_ITER: usize = 200;
    const GRAD_TOL: f64 = 1e-12;
    const MIN_WEIGHT: f64 = 1e-10;

    let n = x.nrows();
    let p = x.ncols();
    let nf = n as f64;
    let d = p + 1;

    let eta_of = |beta: &Array1<f64>| -> Array1<f64> {
        let mut eta = x.dot(&beta.slice(ndarray::s![1..]));
        let b0 = beta[0];
        eta.zip_mut_with(&offset, |e, o| *e += b0 + o);
        eta
    };
    let penalized_loss = |beta: &Array1<f64>| -> f64 {
        let eta = eta_of(beta);
        let base: f64 =
            y.iter().zip(&eta).map(|(&y, &e)| family.loss_term(y, e)).sum::<f64>() / nf;
        let pen: f64 =
            0.5 * ridge * beta.slice(ndarray::s![1..]).iter().map(|b| b * b).sum::<f64>();
        base + pen
    };

    let mut beta = Array1::<f64>::zeros(d);
    let mut obj = penalized_loss(&beta);
    let mut iterations = 0;

    for iter in 1..=MAX_ITER {
        iterations = iter;
        let eta = eta_of(&beta);
        let mu = eta.mapv(|e| family.mean_from_eta(e));
        let mut grad = Array1::<f64>::zeros(d);
        let resid = &mu - &y;
        grad[0] = resid.sum() / nf;
        grad.slice_mut(ndarray::s![1..]).assign(&(x.t().dot(&resid) / nf));
        for j in 1..d {
            grad[j] += ridge * beta[j];
        }
        let grad_norm = grad.iter().map(|g| g * g).sum::<f64>().sqrt();
        if grad_norm < GRAD_TOL {
            return Ok(IrlsFit {
                coefficients: beta,
                iterations,
                converged: true,
                gradient_norm: grad_norm,
            });
        }

        let w = mu.mapv(|m| family.variance(m).max(MIN_WEIGHT));
        // H = (1/n) [1 X]^T W [1 X] + ridge * diag(0, 1, ..., 1)
        let xw = &x * &w.view().insert_axis(Axis(1));
        let mut h = Array2::<f64>::zeros((d, d));
        h[[0, 0]] = w.sum() / nf;
        let xw_colsum = xw.sum_axis(Axis(0)) / nf;
        for j in 0..p {
            h[[0, j + 1]] = xw_colsum[j];
            h[[j + 1, 0]] = xw_colsum[j];
        }
        let xtwx = x.t().dot(&xw) / nf;
        h.slice_mut(ndarray::s![1.., 1..]).assign(&xtwx);
        for j in 1..d {
            h[[j, j]] += ridge;
        }

        let delta = solve_symmetric(&h, &grad).map_err(|_| {
            Error::SingularSystem(format!(
                "weighted normal equations are singular at ridge = {ridge}"
            ))
        })?;

        // Newton step with halving if the penalized loss does not decrease.
        let mut step = 1.0;
        let mut accepted = false;
        for _ in 0..40 {
            let candidate = &beta - &(&delta * step);
            let cand_obj = penalized_loss(&candidate);
            if cand_obj.is_finite() && cand_obj <= obj + 1e-14 * obj.abs().max(1.0) {
                beta = candidate;
                obj = cand_obj;
                accepted = true;
                break;
            }
            step *= 0.5;
        }
        if !accepted {
            break;
        }
    }

    // Final gradient check.
    let eta = eta_of(&beta);
    let mu = eta.mapv(|e| family.mean_from_eta(e));
    let resid = &mu - &y;
    let mut grad = Array1::<f64>::zeros(d);
    grad[0] = resid.sum() / nf;
    grad.slice_mut(ndarray::s![1..]).assign(&(x.t().dot(&resid) / nf));
    for j in 1..d {
        grad[j] += ridge * beta[j];
    }
    let grad_norm = grad.iter().map(|g| g * g).sum::<f64>().sqrt();
    Ok(IrlsFit { coefficients: beta, iterations, converged: grad_norm < 1e-8, gradient_norm: grad_norm })
}

fn solve_symmetric(h: &Array2<f64>, rhs: &Array1<f64>) -> std::result::Result<Array1<f64>, ()> {
    let d = h.nrows();
    let m = nalgebra::DMatrix::from_fn(d, d, |i, j| h[[i, j]]);
    let b = nalgebra::DVector::from_fn(d, |i, _| rhs[i]);
    let chol = nalgebra::Cholesky::new(m).ok_or(())?;
    // Cholesky can complete on a numerically singular matrix with a tiny
    // positive pivot; treat a collapsed pivot as rank deficiency.
    let diag = chol.l_dirty();
    let mut min_pivot = f64::INFINITY;
    let mut max_pivot = 0.0f64;
    for i in 0..d {
        let p = diag[(i, i)];
        min_pivot = min_pivot.min(p);
        max_pivot = max_pivot.max(p);
    }
    if !(min_pivot > 0.0) || min_pivot * min_pivot <= 1e-13 * max_pivot * max_pivot {
        return Err(());
    }
    Ok(Array1::from_iter(chol.solve(&b).iter().copied()))
}
