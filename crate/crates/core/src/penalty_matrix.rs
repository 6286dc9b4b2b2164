//! Weighted first-order difference matrices `D(w)` and graph difference
//! matrices `G(w)`. Each row encodes one regularized difference
//! `w * (beta_l - beta_i)`: `-w` in column `i`, `+w` in column `l`. When a
//! reference level is declared its column is deleted, which can leave a row
//! with a single entry.

use ndarray::{Array1, Array2, ArrayView1};

use crate::error::{Error, Result};
use crate::graph::Graph;

/// One row of a penalty matrix: `-weight` at `neg`, `+weight` at `pos`.
/// Either side may be absent after reference-column deletion.
#[derive(Debug, Clone, Copy)]
pub struct PenaltyRow {
    pub neg: Option<usize>,
    pub pos: Option<usize>,
    pub weight: f64,
}

/// Sparse row representation of `D(w)` / `G(w)`: at most two nonzeros per row.
#[derive(Debug, Clone)]
pub struct PenaltyMatrix {
    rows: Vec<PenaltyRow>,
    ncols: usize,
}

impl PenaltyMatrix {
    pub fn n_rows(&self) -> usize {
        self.rows.len()
    }

    pub fn n_cols(&self) -> usize {
        self.ncols
    }

    pub fn rows(&self) -> &[PenaltyRow] {
        &self.rows
    }

    /// `G x`
    pub fn apply(&self, x: ArrayView1<f64>) -> Array1<f64> {
        let mut out = Array1::zeros(self.rows.len());
        self.apply_into(x, &mut out);
        out
    }

    pub fn apply_into(&self, x: ArrayView1<f64>, out: &mut Array1<f64>) {
        debug_assert_eq!(x.len(), self.ncols);
        debug_assert_eq!(out.len(), self.rows.len());
        for (r, row) in self.rows.iter().enumerate() {
            let mut v = 0.0;
            if let Some(i) = row.neg {
                v -= row.weight * x[i];
            }
            if let Some(l) = row.pos {
                v += row.weight * x[l];
            }
            out[r] = v;
        }
    }

    /// `G^T v`
    pub fn apply_transpose(&self, v: ArrayView1<f64>) -> Array1<f64> {
        let mut out = Array1::zeros(self.ncols);
        self.apply_transpose_into(v, &mut out);
        out
    }

    pub fn apply_transpose_into(&self, v: ArrayView1<f64>, out: &mut Array1<f64>) {
        debug_assert_eq!(v.len(), self.rows.len());
        debug_assert_eq!(out.len(), self.ncols);
        out.fill(0.0);
        for (r, row) in self.rows.iter().enumerate() {
            if let Some(i) = row.neg {
                out[i] -= row.weight * v[r];
            }
            if let Some(l) = row.pos {
                out[l] += row.weight * v[r];
            }
        }
    }

    /// `sum_rows |(G x)_r|`, the penalty value `||G(w) x||_1`.
    pub fn l1_of_product(&self, x: ArrayView1<f64>) -> f64 {
        self.apply(x).iter().map(|v| v.abs()).sum()
    }

    pub fn to_dense(&self) -> Array2<f64> {
        let mut m = Array2::zeros((self.rows.len(), self.ncols));
        for (r, row) in self.rows.iter().enumerate() {
            if let Some(i) = row.neg {
                m[[r, i]] -= row.weight;
            }
            if let Some(l) = row.pos {
                m[[r, l]] += row.weight;
            }
        }
        m
    }

    /// Dense `G^T G`, used for the eigendecomposition in the ADMM solver.
    pub fn gram(&self) -> Array2<f64> {
        let mut m = Array2::zeros((self.ncols, self.ncols));
        for row in &self.rows {
            let w2 = row.weight * row.weight;
            match (row.neg, row.pos) {
                (Some(i), Some(l)) => {
                    m[[i, i]] += w2;
                    m[[l, l]] += w2;
                    m[[i, l]] -= w2;
                    m[[l, i]] -= w2;
                }
                (Some(i), None) => m[[i, i]] += w2,
                (None, Some(l)) => m[[l, l]] += w2,
                (None, None) => {}
            }
        }
        m
    }
}

fn check_weights(weights: &[f64], expected: usize, what: &str) -> Result<()> {
    if weights.len() != expected {
        return Err(Error::ShapeMismatch(format!(
            "{what}: expected {expected} weights, got {}",
            weights.len()
        )));
    }
    for &w in weights {
        if !(w.is_finite() && w > 0.0) {
            return Err(Error::InvalidArgument(format!(
                "{what}: weights must be strictly positive and finite, got {w}"
            )));
        }
    }
    Ok(())
}

/// Map full level indices to column indices after deleting the reference
/// column; the reference level itself maps to `None`.
fn level_to_column(n_levels: usize, reference: Option<usize>) -> Result<Vec<Option<usize>>> {
    if let Some(r) = reference {
        if r >= n_levels {
            return Err(Error::InvalidSpec(format!(
                "reference level {r} out of bounds for {n_levels} levels"
            )));
        }
    }
    Ok((0..n_levels)
        .map(|i| match reference {
            Some(r) if i == r => None,
            Some(r) if i > r => Some(i - 1),
            _ => Some(i),
        })
        .collect())
}

/// First-order difference matrix `D(w)` over `n_levels` consecutive levels:
/// row `i` has `-w_i` at column `i` and `+w_i` at column `i+1`. A declared
/// reference level drops the corresponding column.
pub fn build_difference_matrix(
    n_levels: usize,
    weights: &[f64],
    reference: Option<usize>,
) -> Result<PenaltyMatrix> {
    if n_levels < 2 {
        return Err(Error::InvalidSpec(format!(
            "difference matrix needs at least 2 levels, got {n_levels}"
        )));
    }
    check_weights(weights, n_levels - 1, "difference matrix")?;
    let col = level_to_column(n_levels, reference)?;
    let rows = (0..n_levels - 1)
        .map(|i| PenaltyRow { neg: col[i], pos: col[i + 1], weight: weights[i] })
        .collect();
    Ok(PenaltyMatrix { rows, ncols: n_levels - reference.map_or(0, |_| 1) })
}

/// Graph difference matrix `G(w)`: one row per edge `(i, l)` with `-w` at
/// column `i` and `+w` at column `l`. A declared reference level drops the
/// corresponding column.
pub fn build_graph_matrix(
    graph: &Graph,
    weights: &[f64],
    reference: Option<usize>,
) -> Result<PenaltyMatrix> {
    check_weights(weights, graph.n_edges(), "graph matrix")?;
    let col = level_to_column(graph.n_levels(), reference)?;
    let rows = graph
        .edges()
        .iter()
        .zip(weights)
        .map(|(&(i, l), &w)| PenaltyRow { neg: col[i], pos: col[l], weight: w })
        .collect();
    Ok(PenaltyMatrix { rows, ncols: graph.n_levels() - reference.map_or(0, |_| 1) })
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    #[test]
    fn difference_matrix_structure() {
        // p_j = 3, w = (1, 1)
        let d = build_difference_matrix(3, &[1.0, 1.0], None).unwrap();
        assert_eq!(d.to_dense(), array![[-1.0, 1.0, 0.0], [0.0, -1.0, 1.0]]);
    }

    #[test]
    fn difference_matrix_single_row() {
        let d = build_difference_matrix(2, &[2.0], None).unwrap();
        assert_eq!(d.to_dense(), array![[-2.0, 2.0]]);
    }

    #[test]
    fn difference_matrix_reference_column_dropped() {
        // drop column 0 of the p_j = 3 matrix
        let d = build_difference_matrix(3, &[1.0, 1.0], Some(0)).unwrap();
        assert_eq!(d.to_dense(), array![[1.0, 0.0], [-1.0, 1.0]]);
    }

    #[test]
    fn nonpositive_weight_rejected() {
        assert!(build_difference_matrix(3, &[1.0, 0.0], None).is_err());
        assert!(build_difference_matrix(3, &[1.0, -1.0], None).is_err());
        assert!(build_difference_matrix(3, &[1.0, f64::NAN], None).is_err());
    }

    #[test]
    fn chain_graph_matches_difference_matrix() {
        let g = Graph::chain(3).unwrap();
        let gm = build_graph_matrix(&g, &[1.0, 1.0], None).unwrap();
        let d = build_difference_matrix(3, &[1.0, 1.0], None).unwrap();
        assert_eq!(gm.to_dense(), d.to_dense());
    }

    #[test]
    fn complete_graph_rows() {
        let g = Graph::complete(3).unwrap();
        let m = build_graph_matrix(&g, &[1.0; 3], None).unwrap();
        assert_eq!(
            m.to_dense(),
            array![[-1.0, 1.0, 0.0], [-1.0, 0.0, 1.0], [0.0, -1.0, 1.0]]
        );
    }

    #[test]
    fn grid_2x2_rows() {
        let g = Graph::grid(2, 2).unwrap();
        let m = build_graph_matrix(&g, &[1.0; 4], None).unwrap();
        let dense = m.to_dense();
        assert_eq!(dense.nrows(), 4);
        // two horizontal edges (0,1), (2,3) and two vertical (0,2), (1,3)
        let mut pairs: Vec<(usize, usize)> = m
            .rows()
            .iter()
            .map(|r| (r.neg.unwrap(), r.pos.unwrap()))
            .collect();
        pairs.sort();
        assert_eq!(pairs, vec![(0, 1), (0, 2), (1, 3), (2, 3)]);
    }

    #[test]
    fn weight_length_mismatch() {
        let g = Graph::complete(3).unwrap();
        assert!(build_graph_matrix(&g, &[1.0, 1.0], None).is_err());
    }

    #[test]
    fn rows_have_two_nonzeros_summing_to_zero() {
        for g in [Graph::chain(6).unwrap(), Graph::complete(5).unwrap(), Graph::grid(2, 3).unwrap()] {
            let w: Vec<f64> = (0..g.n_edges()).map(|i| 0.5 + i as f64 * 0.1).collect();
            let m = build_graph_matrix(&g, &w, None).unwrap();
            let dense = m.to_dense();
            for r in 0..dense.nrows() {
                let row = dense.row(r);
                let nonzeros: Vec<f64> = row.iter().copied().filter(|v| *v != 0.0).collect();
                assert_eq!(nonzeros.len(), 2);
                assert!((nonzeros[0] + nonzeros[1]).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn gram_matches_dense_product() {
        let g = Graph::grid(2, 3).unwrap();
        let w: Vec<f64> = (0..g.n_edges()).map(|i| 1.0 + i as f64 * 0.3).collect();
        let m = build_graph_matrix(&g, &w, Some(2)).unwrap();
        let dense = m.to_dense();
        let gram = dense.t().dot(&dense);
        let diff = &gram - &m.gram();
        assert!(diff.iter().all(|v| v.abs() < 1e-12));
    }
}
