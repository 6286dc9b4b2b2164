//! Bias-reducing re-estimation: read the zero/fusion pattern off a
//! regularized fit, collapse the design accordingly (drop zeroed columns, sum
//! fused dummy columns) and refit without penalties. The re-estimated
//! coefficients keep exactly the same zeros and fusions.

use ndarray::{Array1, Array2};

use crate::error::{Error, Result};
use crate::family::{irls_core, IrlsFit};
use crate::model::ModelSpec;

/// How each original design column maps into the collapsed design.
#[derive(Debug, Clone)]
pub struct CollapsePlan {
    /// Per original column: `None` if dropped (zero coefficient), otherwise
    /// the reduced column index. Columns fused together share an index.
    pub column_map: Vec<Option<usize>>,
    pub n_reduced: usize,
}

/// Union-find over level indices.
struct Dsu {
    parent: Vec<usize>,
}

impl Dsu {
    fn new(n: usize) -> Self {
        Self { parent: (0..n).collect() }
    }

    fn find(&mut self, i: usize) -> usize {
        if self.parent[i] != i {
            let root = self.find(self.parent[i]);
            self.parent[i] = root;
        }
        self.parent[i]
    }

    fn union(&mut self, a: usize, b: usize) {
        let ra = self.find(a);
        let rb = self.find(b);
        if ra != rb {
            self.parent[ra.max(rb)] = ra.min(rb);
        }
    }
}

/// Build the collapse plan for a fitted coefficient vector.
///
/// Coefficients within `tolerance` of zero are dropped. Within a fused
/// block, the remaining levels are clustered as connected components of the
/// regularized edges whose endpoint values agree within `tolerance`; each
/// cluster becomes one reduced column. Lasso and Group Lasso blocks only
/// drop zeros, they never fuse.
pub fn build_collapse_plan(spec: &ModelSpec, beta: &Array1<f64>, tolerance: f64) -> CollapsePlan {
    let mut column_map: Vec<Option<usize>> = vec![None; spec.p()];
    let mut next = 0usize;

    for block in spec.blocks() {
        if block.is_intercept() {
            continue;
        }
        let cols = block.design_columns();
        let coefs = spec.block_coefficients(block, beta);
        if block.penalty.is_fused() {
            let info = block.levels.as_ref().expect("fused block has levels");
            let graph = block.graph.as_ref().expect("fused block has a graph");
            let values: Vec<f64> = spec.level_values(block, beta);
            let n_levels = info.n_levels();
            let retained: Vec<bool> = (0..n_levels)
                .map(|lv| {
                    info.level_column(lv).is_some() && values[lv].abs() > tolerance
                })
                .collect();
            let mut dsu = Dsu::new(n_levels);
            for &(i, l) in graph.edges() {
                if retained[i] && retained[l] && (values[i] - values[l]).abs() <= tolerance {
                    dsu.union(i, l);
                }
            }
            let mut cluster_column: std::collections::BTreeMap<usize, usize> = Default::default();
            for lv in 0..n_levels {
                if !retained[lv] {
                    continue;
                }
                let root = dsu.find(lv);
                let reduced = *cluster_column.entry(root).or_insert_with(|| {
                    let r = next;
                    next += 1;
                    r
                });
                let offset = info.level_column(lv).expect("retained level has a column");
                column_map[cols.start + offset] = Some(reduced);
            }
        } else {
            for (offset, &value) in coefs.iter().enumerate() {
                if value.abs() > tolerance {
                    column_map[cols.start + offset] = Some(next);
                    next += 1;
                }
            }
        }
    }

    CollapsePlan { column_map, n_reduced: next }
}

#[derive(Debug, Clone)]
pub struct ReestimatedFit {
    /// Coefficients broadcast back to the full layout (intercept first).
    pub coefficients: Array1<f64>,
    /// A rank-deficient collapsed design forced a tiny ridge.
    pub used_ridge: bool,
    pub iterations: usize,
    pub converged: bool,
}

/// Unpenalized refit on the collapsed design. Falls back to a ridge of 1e-8
/// (with a warning) if the collapsed design is rank deficient.
pub fn reestimate_fit(spec: &ModelSpec, plan: &CollapsePlan) -> Result<ReestimatedFit> {
    if plan.column_map.len() != spec.p() {
        return Err(Error::ShapeMismatch(format!(
            "collapse plan covers {} columns, design has {}",
            plan.column_map.len(),
            spec.p()
        )));
    }
    let n = spec.n();
    let mut reduced = Array2::<f64>::zeros((n, plan.n_reduced));
    for (col, target) in plan.column_map.iter().enumerate() {
        if let Some(r) = *target {
            let src = spec.design().values.column(col);
            reduced.column_mut(r).zip_mut_with(&src, |d, s| *d += s);
        }
    }

    let fit: IrlsFit = match irls_core(
        spec.family(),
        reduced.view(),
        spec.response().view(),
        spec.design().offset.view(),
        0.0,
    ) {
        Ok(fit) => fit,
        Err(Error::SingularSystem(_)) => {
            log::warn!("collapsed design is rank deficient; refitting with ridge 1e-8");
            let fit = irls_core(
                spec.family(),
                reduced.view(),
                spec.response().view(),
                spec.design().offset.view(),
                1e-8,
            )?;
            return Ok(expand(spec, plan, fit, true));
        }
        Err(e) => return Err(e),
    };
    Ok(expand(spec, plan, fit, false))
}

fn expand(spec: &ModelSpec, plan: &CollapsePlan, fit: IrlsFit, used_ridge: bool) -> ReestimatedFit {
    let mut coefficients = Array1::zeros(spec.n_coefficients());
    coefficients[0] = fit.coefficients[0];
    for (col, target) in plan.column_map.iter().enumerate() {
        if let Some(r) = *target {
            coefficients[col + 1] = fit.coefficients[r + 1];
        }
    }
    ReestimatedFit {
        coefficients,
        used_ridge,
        iterations: fit.iterations,
        converged: fit.converged,
    }
}

/// Reporting view of the fusion pattern: per block, a group id and zero flag
/// for every level (reference levels included, at value 0). Levels joined by
/// a regularized edge whose values agree within `tolerance` share a group.
#[derive(Debug, Clone)]
pub struct BlockGroups {
    pub block_name: String,
    /// One entry per level for blocks with level structure, otherwise one
    /// per coefficient.
    pub group_of: Vec<usize>,
    pub is_zero: Vec<bool>,
}

pub fn fusion_groups(spec: &ModelSpec, beta: &Array1<f64>, tolerance: f64) -> Vec<BlockGroups> {
    let mut out = Vec::new();
    for block in spec.blocks() {
        if block.is_intercept() {
            out.push(BlockGroups {
                block_name: block.name.clone(),
                group_of: vec![0],
                is_zero: vec![beta[0].abs() <= tolerance],
            });
            continue;
        }
        let values = spec.level_values(block, beta);
        let k = values.len();
        let mut group_of: Vec<usize> = (0..k).collect();
        if block.penalty.is_fused() {
            let graph = block.graph.as_ref().expect("fused block has a graph");
            let mut dsu = Dsu::new(k);
            for &(i, l) in graph.edges() {
                if (values[i] - values[l]).abs() <= tolerance {
                    dsu.union(i, l);
                }
            }
            let mut rename: std::collections::BTreeMap<usize, usize> = Default::default();
            for lv in 0..k {
                let root = dsu.find(lv);
                let next_id = rename.len();
                let id = *rename.entry(root).or_insert(next_id);
                group_of[lv] = id;
            }
        }
        let is_zero = values.iter().map(|v| v.abs() <= tolerance).collect();
        out.push(BlockGroups { block_name: block.name.clone(), group_of, is_zero });
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::family::{loss, Family};
    use crate::model::{ModelSpecBuilder, PenaltyKind};
    use approx::assert_abs_diff_eq;
    use ndarray::array;
    use rand::prelude::*;
    use rand_chacha::ChaCha8Rng;

    fn chain_spec(levels: usize, seed: u64, n: usize) -> (ModelSpec, Vec<usize>) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let obs: Vec<usize> = (0..n).map(|_| rng.gen_range(0..levels)).collect();
        let y = Array1::from_iter((0..n).map(|_| if rng.gen::<f64>() < 0.5 { 1.0 } else { 0.0 }));
        let spec = ModelSpecBuilder::new(Family::Binomial)
            .response(y)
            .add_factor(
                "f",
                (0..levels).map(|i| i.to_string()).collect(),
                &obs,
                PenaltyKind::FusedLasso,
                None,
                Some(0),
            )
            .build()
            .unwrap();
        (spec, obs)
    }

    #[test]
    fn plan_reads_zero_and_fusion_pattern() {
        // block levels (ref=0): values (0, 0.3, 0.3, 0.7) on a chain
        let (spec, _) = chain_spec(4, 1, 60);
        let beta = array![0.1, 0.3, 0.3, 0.7];
        let plan = build_collapse_plan(&spec, &beta, 1e-7);
        // column 0 (level 1) and column 1 (level 2) merge; column 2 alone
        assert_eq!(plan.column_map, vec![Some(0), Some(0), Some(1)]);
        assert_eq!(plan.n_reduced, 2);
    }

    #[test]
    fn all_zero_block_is_dropped() {
        let (spec, _) = chain_spec(4, 2, 60);
        let beta = array![0.4, 0.0, 0.0, 0.0];
        let plan = build_collapse_plan(&spec, &beta, 1e-7);
        assert_eq!(plan.n_reduced, 0);
        assert!(plan.column_map.iter().all(|m| m.is_none()));

        let refit = reestimate_fit(&spec, &plan).unwrap();
        // intercept-only fit
        assert!(refit.coefficients.iter().skip(1).all(|&v| v == 0.0));
    }

    #[test]
    fn non_adjacent_equal_values_stay_separate() {
        // chain values (0.3, 0.7, 0.3): the two 0.3s are not adjacent, so
        // they form two distinct clusters
        let (spec, _) = chain_spec(4, 3, 80);
        let beta = array![0.0, 0.3, 0.7, 0.3];
        let plan = build_collapse_plan(&spec, &beta, 1e-7);
        assert_eq!(plan.n_reduced, 3);
        assert_eq!(plan.column_map, vec![Some(0), Some(1), Some(2)]);
    }

    #[test]
    fn reestimate_preserves_pattern_and_improves_likelihood() {
        let (spec, _) = chain_spec(5, 4, 400);
        // a plausible regularized fit: levels 1,2 fused and 3,4 fused
        let beta = array![-0.2, 0.25, 0.25, 0.6, 0.6];
        let plan = build_collapse_plan(&spec, &beta, 1e-7);
        assert_eq!(plan.n_reduced, 2);
        let refit = reestimate_fit(&spec, &plan).unwrap();
        assert!(!refit.used_ridge);
        // pattern preserved exactly
        assert_abs_diff_eq!(refit.coefficients[1], refit.coefficients[2], epsilon = 0.0);
        assert_abs_diff_eq!(refit.coefficients[3], refit.coefficients[4], epsilon = 0.0);
        // unpenalized refit can only improve the in-sample loss
        assert!(loss(&spec, refit.coefficients.view()) <= loss(&spec, beta.view()) + 1e-12);
    }

    #[test]
    fn gaussian_reestimate_matches_collapsed_least_squares() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let n = 50;
        let obs: Vec<usize> = (0..n).map(|_| rng.gen_range(0..3)).collect();
        let y = Array1::from_iter((0..n).map(|i| obs[i] as f64 + rng.gen_range(-0.1..0.1)));
        let spec = ModelSpecBuilder::new(Family::Gaussian)
            .response(y.clone())
            .add_factor(
                "f",
                vec!["a".into(), "b".into(), "c".into()],
                &obs,
                PenaltyKind::FusedLasso,
                None,
                Some(0),
            )
            .build()
            .unwrap();
        let beta = array![0.0, 1.0, 2.0];
        let plan = build_collapse_plan(&spec, &beta, 1e-7);
        assert_eq!(plan.n_reduced, 2);
        let refit = reestimate_fit(&spec, &plan).unwrap();
        let direct = crate::family::irls_fit(&spec, 0.0).unwrap();
        for j in 0..3 {
            assert_abs_diff_eq!(refit.coefficients[j], direct.coefficients[j], epsilon = 1e-8);
        }
    }

    #[test]
    fn fusion_groups_report_reference_level() {
        let (spec, _) = chain_spec(4, 6, 60);
        let beta = array![0.1, 1e-9, 0.5, 0.5];
        let groups = fusion_groups(&spec, &beta, 1e-7);
        let g = &groups[1];
        // levels: ref(0), ~0, 0.5, 0.5 -> groups {0,1}, {2,3}
        assert_eq!(g.group_of[0], g.group_of[1]);
        assert_eq!(g.group_of[2], g.group_of[3]);
        assert_ne!(g.group_of[0], g.group_of[2]);
        assert_eq!(g.is_zero, vec![true, true, false, false]);
    }
}
