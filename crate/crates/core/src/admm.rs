//! ADMM solver for the proximal operator of the (Generalized) Fused Lasso,
//!
//! ```text
//! argmin_x 1/2 ||beta_tilde - x||_2^2 + s*lambda ||G(w) x||_1
//! ```
//!
//! split as `min 1/2||beta_tilde - x||^2 + s*lambda ||z||_1` subject to
//! `G x - z = 0`, with over-relaxation, residual-balancing adaptation of the
//! augmented-Lagrangian parameter `rho`, and an x-update through the
//! eigendecomposition of `G^T G` so that the inverse is cheap to refresh
//! whenever `rho` changes.

use ndarray::{Array1, Array2};

use crate::error::{Error, Result};
use crate::penalty_matrix::PenaltyMatrix;
use crate::prox::soft_threshold_scalar;

/// ADMM parameters. Defaults follow the reference parameter table.
#[derive(Debug, Clone)]
pub struct AdmmSettings {
    pub rho0: f64,
    pub eps_abs: f64,
    pub eps_rel: f64,
    /// Over-relaxation parameter, in (1, 2).
    pub xi: f64,
    /// Residual-imbalance factor triggering a rho update.
    pub mu_rho: f64,
    /// Multiplicative rho update factor.
    pub eta_rho: f64,
    pub max_iter: usize,
}

impl Default for AdmmSettings {
    fn default() -> Self {
        Self {
            rho0: 1.0,
            eps_abs: 1e-12,
            eps_rel: 1e-10,
            xi: 1.5,
            mu_rho: 10.0,
            eta_rho: 2.0,
            max_iter: 10_000,
        }
    }
}

impl AdmmSettings {
    pub fn validate(&self) -> Result<()> {
        if !(self.xi > 1.0 && self.xi < 2.0) {
            return Err(Error::InvalidArgument(format!("xi must lie in (1, 2), got {}", self.xi)));
        }
        if self.eta_rho <= 1.0 || self.mu_rho <= 1.0 {
            return Err(Error::InvalidArgument(
                "eta_rho and mu_rho must be greater than 1".into(),
            ));
        }
        if self.rho0 <= 0.0 || self.eps_abs <= 0.0 || self.eps_rel <= 0.0 {
            return Err(Error::InvalidArgument(
                "rho0, eps_abs and eps_rel must be positive".into(),
            ));
        }
        Ok(())
    }
}

/// Eigendecomposition `G^T G = Q diag(ell) Q^T`, computed once per block and
/// reused across all proximal calls and every change of `rho`.
#[derive(Debug, Clone)]
pub struct EigenCache {
    q: Array2<f64>,
    eigenvalues: Array1<f64>,
}

impl EigenCache {
    pub fn eigenvalues(&self) -> &Array1<f64> {
        &self.eigenvalues
    }

    pub fn reconstruction(&self) -> Array2<f64> {
        let scaled = &self.q * &self.eigenvalues.view().insert_axis(ndarray::Axis(0));
        scaled.dot(&self.q.t())
    }

    /// Apply `(I + rho G^T G)^{-1} = Q diag(1 / (1 + rho * ell)) Q^T`.
    /// This is the eigenbasis form of the Woodbury identity
    /// `I - rho Q diag(ell / (1 + rho ell)) Q^T` and stays stable for zero
    /// and for very large eigenvalues.
    fn solve_into(&self, rho: f64, rhs: &Array1<f64>, tmp: &mut Array1<f64>, out: &mut Array1<f64>) {
        ndarray::linalg::general_mat_vec_mul(1.0, &self.q.t(), rhs, 0.0, tmp);
        tmp.zip_mut_with(&self.eigenvalues, |v, &l| *v /= 1.0 + rho * l);
        ndarray::linalg::general_mat_vec_mul(1.0, &self.q, tmp, 0.0, out);
    }
}

/// Eigendecomposition of `G^T G`. Eigenvalues are clamped at zero;
/// `G^T G` is positive semidefinite so anything below `-1e-8` is an error.
pub fn build_eigen_cache(g: &PenaltyMatrix) -> Result<EigenCache> {
    let gram = g.gram();
    let d = gram.nrows();
    let m = nalgebra::DMatrix::from_fn(d, d, |i, j| gram[[i, j]]);
    let eig = nalgebra::SymmetricEigen::new(m);
    let mut eigenvalues = Array1::zeros(d);
    for i in 0..d {
        let l = eig.eigenvalues[i];
        if !l.is_finite() {
            return Err(Error::Numerical("eigendecomposition of G^T G failed".into()));
        }
        let scale = gram.iter().fold(1.0f64, |a, v| a.max(v.abs()));
        if l < -1e-8 * scale {
            return Err(Error::Numerical(format!(
                "G^T G has a significantly negative eigenvalue {l}"
            )));
        }
        eigenvalues[i] = l.max(0.0);
    }
    let q = Array2::from_shape_fn((d, d), |(i, j)| eig.eigenvectors[(i, j)]);
    Ok(EigenCache { q, eigenvalues })
}

/// Result of one proximal solve. The final splitting variable `z` and scaled
/// dual `u` are exposed so the residual tolerances can be recomputed by
/// callers and tests.
#[derive(Debug, Clone)]
pub struct ProxOutcome {
    pub x: Array1<f64>,
    pub z: Array1<f64>,
    pub u: Array1<f64>,
    pub iterations: usize,
    pub converged: bool,
    pub rho: f64,
    pub primal_residual: f64,
    pub dual_residual: f64,
    pub eps_primal: f64,
    pub eps_dual: f64,
}

/// Solve the fused-penalty proximal operator by ADMM.
///
/// `slambda` is the product `s * lambda` of the step size and the tuning
/// parameter; the penalty weights are already embedded in `g`. `warm_x` (the
/// block estimate from the previous outer iteration) seeds `x`, with
/// `z = G x` and `u = 0`. Exhausting `max_iter` is reported through the
/// `converged` flag rather than an error so the outer loop can keep going.
pub fn prox_gen_fused(
    beta_tilde: &Array1<f64>,
    g: &PenaltyMatrix,
    slambda: f64,
    cache: &EigenCache,
    settings: &AdmmSettings,
    warm_x: &Array1<f64>,
) -> ProxOutcome {
    let d = g.n_cols();
    let m = g.n_rows();
    debug_assert_eq!(beta_tilde.len(), d);
    debug_assert_eq!(warm_x.len(), d);

    if slambda == 0.0 || m == 0 {
        return ProxOutcome {
            x: beta_tilde.clone(),
            z: g.apply(beta_tilde.view()),
            u: Array1::zeros(m),
            iterations: 0,
            converged: true,
            rho: settings.rho0,
            primal_residual: 0.0,
            dual_residual: 0.0,
            eps_primal: (m as f64).sqrt() * settings.eps_abs,
            eps_dual: (d as f64).sqrt() * settings.eps_rel,
        };
    }

    let sqrt_m = (m as f64).sqrt();
    let sqrt_d = (d as f64).sqrt();
    let norm2 = |v: &Array1<f64>| v.iter().map(|x| x * x).sum::<f64>().sqrt();

    let mut rho = settings.rho0;
    let mut x = warm_x.clone();
    let mut z = g.apply(x.view());
    let mut u = Array1::<f64>::zeros(m);

    // buffers reused across iterations
    let mut zmu = Array1::<f64>::zeros(m);
    let mut rhs = Array1::<f64>::zeros(d);
    let mut tmp = Array1::<f64>::zeros(d);
    let mut gx = Array1::<f64>::zeros(m);
    let mut z_new = Array1::<f64>::zeros(m);
    let mut dual_buf = Array1::<f64>::zeros(d);

    let mut outcome_iterations = settings.max_iter;
    let mut converged = false;
    let (mut r_norm, mut s_norm, mut eps_pri, mut eps_dual) = (0.0, 0.0, 0.0, 0.0);

    for iter in 1..=settings.max_iter {
        // x-update
        for i in 0..m {
            zmu[i] = z[i] - u[i];
        }
        g.apply_transpose_into(zmu.view(), &mut rhs);
        for i in 0..d {
            rhs[i] = beta_tilde[i] + rho * rhs[i];
        }
        cache.solve_into(rho, &rhs, &mut tmp, &mut x);
        g.apply_into(x.view(), &mut gx);

        // relaxed z-update (ax stored in zmu), then u-update
        let threshold = slambda / rho;
        let one_minus_xi = 1.0 - settings.xi;
        for i in 0..m {
            let ax = settings.xi * gx[i] + one_minus_xi * z[i];
            zmu[i] = ax;
            z_new[i] = soft_threshold_scalar(ax + u[i], threshold);
            u[i] += ax - z_new[i];
        }

        // residuals and tolerances; s = -rho G^T (z_new - z_prev)
        r_norm = gx.iter().zip(&z_new).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt();
        for i in 0..m {
            zmu[i] = z_new[i] - z[i];
        }
        g.apply_transpose_into(zmu.view(), &mut dual_buf);
        s_norm = rho * norm2(&dual_buf);
        std::mem::swap(&mut z, &mut z_new);

        eps_pri = sqrt_m * settings.eps_abs + settings.eps_rel * norm2(&gx).max(norm2(&z));
        g.apply_transpose_into(u.view(), &mut dual_buf);
        eps_dual = sqrt_d * settings.eps_rel + settings.eps_abs * rho * norm2(&dual_buf);

        if r_norm <= eps_pri && s_norm <= eps_dual {
            outcome_iterations = iter;
            converged = true;
            break;
        }

        // rho adaptation balancing the residual-to-tolerance ratios; the
        // scaled dual variable must be rescaled by rho_old / rho_new.
        let ratio_pri = r_norm / eps_pri;
        let ratio_dual = s_norm / eps_dual;
        let rho_new = if ratio_pri >= settings.mu_rho * ratio_dual {
            rho * settings.eta_rho
        } else if ratio_dual >= settings.mu_rho * ratio_pri {
            rho / settings.eta_rho
        } else {
            rho
        };
        if rho_new != rho {
            u *= rho / rho_new;
            rho = rho_new;
        }
    }

    if !converged {
        log::warn!(
            "fused-penalty ADMM did not converge in {} iterations (primal {:.3e}/{:.3e}, dual {:.3e}/{:.3e})",
            settings.max_iter, r_norm, eps_pri, s_norm, eps_dual
        );
    }

    ProxOutcome {
        x,
        z,
        u,
        iterations: outcome_iterations,
        converged,
        rho,
        primal_residual: r_norm,
        dual_residual: s_norm,
        eps_primal: eps_pri,
        eps_dual,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::Graph;
    use crate::penalty_matrix::build_graph_matrix;
    use approx::assert_abs_diff_eq;
    use ndarray::array;
    use rand::prelude::*;
    use rand_chacha::ChaCha8Rng;

    fn chain_matrix(d: usize, w: f64) -> PenaltyMatrix {
        let g = Graph::chain(d).unwrap();
        build_graph_matrix(&g, &vec![w; g.n_edges()], None).unwrap()
    }

    #[test]
    fn chain_eigenvalues_of_path_laplacian() {
        // chain d = 3, unit weights: G^T G is the path-graph Laplacian with
        // eigenvalues {0, 1, 3}
        let g = chain_matrix(3, 1.0);
        let cache = build_eigen_cache(&g).unwrap();
        let mut ev: Vec<f64> = cache.eigenvalues().to_vec();
        ev.sort_by(|a, b| a.partial_cmp(b).unwrap());
        assert_abs_diff_eq!(ev[0], 0.0, epsilon = 1e-10);
        assert_abs_diff_eq!(ev[1], 1.0, epsilon = 1e-10);
        assert_abs_diff_eq!(ev[2], 3.0, epsilon = 1e-10);
    }

    #[test]
    fn single_column_eigenvalue() {
        // d = 1 arises for a two-level block with a reference: G = [w]
        let d = crate::penalty_matrix::build_difference_matrix(2, &[3.0], Some(0)).unwrap();
        let cache = build_eigen_cache(&d).unwrap();
        assert_eq!(cache.eigenvalues().len(), 1);
        assert_abs_diff_eq!(cache.eigenvalues()[0], 9.0, epsilon = 1e-10);
    }

    #[test]
    fn eigen_reconstruction_on_random_graphs() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        for g in [
            Graph::chain(5).unwrap(),
            Graph::complete(5).unwrap(),
            Graph::grid(2, 3).unwrap(),
        ] {
            let w: Vec<f64> = (0..g.n_edges()).map(|_| rng.gen_range(0.3..2.0)).collect();
            let m = build_graph_matrix(&g, &w, None).unwrap();
            let cache = build_eigen_cache(&m).unwrap();
            let diff = &cache.reconstruction() - &m.gram();
            assert!(diff.iter().all(|v| v.abs() < 1e-10));
        }
    }

    #[test]
    fn zero_slambda_is_identity() {
        let g = chain_matrix(4, 1.0);
        let cache = build_eigen_cache(&g).unwrap();
        let beta = array![0.3, -1.0, 2.0, 0.7];
        let out = prox_gen_fused(
            &beta,
            &g,
            0.0,
            &cache,
            &AdmmSettings::default(),
            &Array1::zeros(4),
        );
        assert_eq!(out.x, beta);
        assert!(out.converged);
    }

    #[test]
    fn two_point_chain_matches_kkt_solution() {
        let g = chain_matrix(2, 1.0);
        let cache = build_eigen_cache(&g).unwrap();
        let settings = AdmmSettings::default();
        let warm = Array1::zeros(2);

        // |b1 - b2| > 2 s*lambda: both ends shrink toward each other
        let out = prox_gen_fused(&array![0.0, 1.0], &g, 0.2, &cache, &settings, &warm);
        assert!(out.converged);
        assert_abs_diff_eq!(out.x[0], 0.2, epsilon = 1e-8);
        assert_abs_diff_eq!(out.x[1], 0.8, epsilon = 1e-8);

        // |b1 - b2| <= 2 s*lambda: fuse at the mean
        let out = prox_gen_fused(&array![0.0, 1.0], &g, 0.6, &cache, &settings, &warm);
        assert!(out.converged);
        assert_abs_diff_eq!(out.x[0], 0.5, epsilon = 1e-8);
        assert_abs_diff_eq!(out.x[1], 0.5, epsilon = 1e-8);
        assert!((out.x[0] - out.x[1]).abs() < 1e-8);
    }

    #[test]
    fn termination_residuals_satisfy_tolerances() {
        let settings = AdmmSettings::default();
        let norm2 = |v: &Array1<f64>| v.iter().map(|x| x * x).sum::<f64>().sqrt();
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for graph in [
            Graph::chain(5).unwrap(),
            Graph::complete(4).unwrap(),
            Graph::grid(2, 3).unwrap(),
        ] {
            let w: Vec<f64> = (0..graph.n_edges()).map(|_| rng.gen_range(0.4..1.8)).collect();
            let m = build_graph_matrix(&graph, &w, None).unwrap();
            let cache = build_eigen_cache(&m).unwrap();
            let d = m.n_cols();
            let beta = Array1::from_iter((0..d).map(|_| rng.gen_range(-2.0f64..2.0)));
            let out = prox_gen_fused(&beta, &m, 0.3, &cache, &settings, &Array1::zeros(d));
            assert!(out.converged);

            // recompute the tolerance formulas from the final iterates
            let gx = m.apply(out.x.view());
            let eps_pri = (m.n_rows() as f64).sqrt() * settings.eps_abs
                + settings.eps_rel * norm2(&gx).max(norm2(&out.z));
            let eps_dual = (d as f64).sqrt() * settings.eps_rel
                + settings.eps_abs * out.rho * norm2(&m.apply_transpose(out.u.view()));
            assert_abs_diff_eq!(out.eps_primal, eps_pri, epsilon = 1e-15);
            assert_abs_diff_eq!(out.eps_dual, eps_dual, epsilon = 1e-15);
            assert!(out.primal_residual <= eps_pri);
            assert!(out.dual_residual <= eps_dual);
        }
    }

    #[test]
    fn prox_optimality_by_random_perturbation() {
        let mut rng = ChaCha8Rng::seed_from_u64(10);
        let graph = Graph::grid(2, 3).unwrap();
        let w: Vec<f64> = (0..graph.n_edges()).map(|_| rng.gen_range(0.4..1.6)).collect();
        let g = build_graph_matrix(&graph, &w, None).unwrap();
        let cache = build_eigen_cache(&g).unwrap();
        let beta = Array1::from_iter((0..6).map(|_| rng.gen_range(-2.0f64..2.0)));
        let slambda = 0.4;
        let out =
            prox_gen_fused(&beta, &g, slambda, &cache, &AdmmSettings::default(), &Array1::zeros(6));
        assert!(out.converged);
        let objective = |x: &Array1<f64>| {
            0.5 * (&beta - x).iter().map(|v| v * v).sum::<f64>() + slambda * g.l1_of_product(x.view())
        };
        let base = objective(&out.x);
        for _ in 0..200 {
            let mut delta = Array1::from_iter((0..6).map(|_| rng.gen_range(-1.0f64..1.0)));
            let norm = delta.iter().map(|v| v * v).sum::<f64>().sqrt();
            delta.mapv_inplace(|v| v * 1e-4 / norm);
            assert!(objective(&(&out.x + &delta)) >= base - 1e-10);
        }
    }

    #[test]
    fn nonexpansive_over_random_inputs() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let graph = Graph::complete(4).unwrap();
        let w: Vec<f64> = (0..graph.n_edges()).map(|_| rng.gen_range(0.4..1.6)).collect();
        let g = build_graph_matrix(&graph, &w, None).unwrap();
        let cache = build_eigen_cache(&g).unwrap();
        let settings = AdmmSettings::default();
        for _ in 0..25 {
            let a = Array1::from_iter((0..4).map(|_| rng.gen_range(-2.0f64..2.0)));
            let b = Array1::from_iter((0..4).map(|_| rng.gen_range(-2.0f64..2.0)));
            let pa = prox_gen_fused(&a, &g, 0.5, &cache, &settings, &Array1::zeros(4)).x;
            let pb = prox_gen_fused(&b, &g, 0.5, &cache, &settings, &Array1::zeros(4)).x;
            let d_in = (&a - &b).iter().map(|v| v * v).sum::<f64>().sqrt();
            let d_out = (&pa - &pb).iter().map(|v| v * v).sum::<f64>().sqrt();
            assert!(d_out <= d_in + 1e-7, "{d_out} > {d_in}");
        }
    }
}
