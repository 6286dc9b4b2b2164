//! Internal linear operators over the design matrix. Dummy-coded predictors
//! make most columns 0/1 indicators; storing those as row-index lists makes
//! the linear predictor and the gradient's transposed product cost
//! proportional to the number of nonzeros instead of n * p.

use ndarray::{Array1, Array2, ArrayView1};

pub(crate) enum ColumnData {
    /// Rows where the column equals 1; all other entries are 0.
    Indicator(Vec<u32>),
    Dense(Array1<f64>),
}

pub(crate) struct HybridDesign {
    n: usize,
    columns: Vec<ColumnData>,
}

impl HybridDesign {
    pub fn from_matrix(values: &Array2<f64>) -> Self {
        let n = values.nrows();
        let columns = values
            .columns()
            .into_iter()
            .map(|col| {
                if col.iter().all(|&v| v == 0.0 || v == 1.0) {
                    ColumnData::Indicator(
                        col.iter()
                            .enumerate()
                            .filter(|(_, &v)| v == 1.0)
                            .map(|(i, _)| i as u32)
                            .collect(),
                    )
                } else {
                    ColumnData::Dense(col.to_owned())
                }
            })
            .collect();
        Self { n, columns }
    }

    /// `intercept + X tail + offset`
    pub fn linear_predictor(
        &self,
        intercept: f64,
        tail: ArrayView1<f64>,
        offset: &Array1<f64>,
    ) -> Array1<f64> {
        debug_assert_eq!(tail.len(), self.columns.len());
        let mut eta = Array1::from_elem(self.n, intercept);
        eta += offset;
        for (j, col) in self.columns.iter().enumerate() {
            let b = tail[j];
            if b == 0.0 {
                continue;
            }
            match col {
                ColumnData::Indicator(rows) => {
                    for &i in rows {
                        eta[i as usize] += b;
                    }
                }
                ColumnData::Dense(v) => {
                    eta.zip_mut_with(v, |e, x| *e += b * x);
                }
            }
        }
        eta
    }

    /// `[sum(r); X^T r]`, intercept component first.
    pub fn transpose_dot_with_intercept(&self, r: &Array1<f64>) -> Array1<f64> {
        let mut out = Array1::zeros(self.columns.len() + 1);
        out[0] = r.sum();
        for (j, col) in self.columns.iter().enumerate() {
            out[j + 1] = match col {
                ColumnData::Indicator(rows) => rows.iter().map(|&i| r[i as usize]).sum(),
                ColumnData::Dense(v) => v.dot(r),
            };
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    #[test]
    fn hybrid_matches_dense_products() {
        let m = array![
            [1.0, 0.3, 0.0],
            [0.0, -1.2, 1.0],
            [1.0, 0.5, 0.0],
            [0.0, 2.0, 1.0]
        ];
        let hybrid = HybridDesign::from_matrix(&m);
        let tail = array![0.5, -2.0, 1.5];
        let offset = array![0.1, 0.2, 0.3, 0.4];
        let eta = hybrid.linear_predictor(0.7, tail.view(), &offset);
        let dense = m.dot(&tail) + &offset + 0.7;
        for i in 0..4 {
            assert!((eta[i] - dense[i]).abs() < 1e-14);
        }

        let r = array![1.0, -0.5, 2.0, 0.25];
        let t = hybrid.transpose_dot_with_intercept(&r);
        assert!((t[0] - r.sum()).abs() < 1e-14);
        let expect = m.t().dot(&r);
        for j in 0..3 {
            assert!((t[j + 1] - expect[j]).abs() < 1e-14);
        }
    }
}
