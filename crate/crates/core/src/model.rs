//! Model specification: the design matrix, the per-predictor block layout of
//! the coefficient vector, and validation of the whole.
//!
//! The coefficient vector has length `1 + p`: entry 0 is the intercept and
//! entry `1 + j` belongs to design column `j`. Blocks partition the
//! coefficient vector; the intercept is its own unpenalized block. Predictors
//! with a reference level are coded by column deletion: neither the design
//! matrix nor the coefficient vector carries an entry for the reference
//! level, whose coefficient is fixed at 0.

use std::ops::Range;

use ndarray::{Array1, Array2, ArrayView1, Axis};

use crate::error::{Error, Result};
use crate::family::Family;
use crate::graph::{Graph, GraphKind};

/// Which penalty acts on a block.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PenaltyKind {
    /// Unpenalized; only valid for the intercept block.
    None,
    Lasso,
    GroupLasso,
    FusedLasso,
    GeneralizedFusedLasso,
}

impl PenaltyKind {
    pub fn is_fused(self) -> bool {
        matches!(self, PenaltyKind::FusedLasso | PenaltyKind::GeneralizedFusedLasso)
    }
}

/// Origin of a design column, for reporting.
#[derive(Debug, Clone)]
pub struct ColumnMeta {
    pub predictor: String,
    pub level: String,
}

/// Level layout of a dummy-coded predictor. `labels` and `counts` cover all
/// levels including the reference level when one is declared.
#[derive(Debug, Clone)]
pub struct LevelInfo {
    pub labels: Vec<String>,
    pub counts: Vec<usize>,
    pub reference: Option<usize>,
}

impl LevelInfo {
    pub fn n_levels(&self) -> usize {
        self.labels.len()
    }

    /// Column offset within the block for a level index, `None` for the
    /// reference level.
    pub fn level_column(&self, level: usize) -> Option<usize> {
        match self.reference {
            Some(r) if level == r => None,
            Some(r) if level > r => Some(level - 1),
            _ => Some(level),
        }
    }
}

/// One predictor block: a contiguous range of the coefficient vector with a
/// penalty, and for fused penalties a graph over the predictor's levels.
#[derive(Debug, Clone)]
pub struct PredictorBlock {
    pub name: String,
    pub penalty: PenaltyKind,
    /// Range into the coefficient vector (intercept = index 0).
    pub coef_range: Range<usize>,
    pub graph: Option<Graph>,
    pub levels: Option<LevelInfo>,
}

impl PredictorBlock {
    pub fn n_coefficients(&self) -> usize {
        self.coef_range.end - self.coef_range.start
    }

    pub fn is_intercept(&self) -> bool {
        self.penalty == PenaltyKind::None
    }

    /// Design-column range (coefficient indices shifted past the intercept).
    /// Empty for the intercept block.
    pub fn design_columns(&self) -> Range<usize> {
        if self.is_intercept() {
            0..0
        } else {
            self.coef_range.start - 1..self.coef_range.end - 1
        }
    }
}

/// Dense design matrix (no intercept column) with an additive offset on the
/// linear-predictor scale.
#[derive(Debug, Clone)]
pub struct DesignMatrix {
    pub values: Array2<f64>,
    /// Length-n offset (for example log exposure); zeros when absent.
    pub offset: Array1<f64>,
    pub column_meta: Vec<ColumnMeta>,
}

impl DesignMatrix {
    pub fn n(&self) -> usize {
        self.values.nrows()
    }

    pub fn p(&self) -> usize {
        self.values.ncols()
    }
}

/// A validated model: design, response, family and block layout. Immutable
/// after construction and safe to share across concurrent fits.
#[derive(Debug, Clone)]
pub struct ModelSpec {
    design: DesignMatrix,
    response: Array1<f64>,
    family: Family,
    blocks: Vec<PredictorBlock>,
}

impl ModelSpec {
    /// Validate and assemble a model specification.
    ///
    /// Checks that the blocks tile the coefficient vector exactly, that the
    /// intercept block appears exactly once, that graphs match the declared
    /// level layouts, that fused blocks are dummy-coded, and that the
    /// response is valid for the family. Level counts are recomputed from the
    /// design so they are always consistent.
    pub fn new(
        design: DesignMatrix,
        response: Array1<f64>,
        family: Family,
        blocks: Vec<PredictorBlock>,
    ) -> Result<Self> {
        let n = design.n();
        let p = design.p();
        if response.len() != n {
            return Err(Error::ShapeMismatch(format!(
                "response has {} entries for {} observations",
                response.len(),
                n
            )));
        }
        if design.offset.len() != n {
            return Err(Error::ShapeMismatch(format!(
                "offset has {} entries for {} observations",
                design.offset.len(),
                n
            )));
        }
        if design.column_meta.len() != p {
            return Err(Error::ShapeMismatch(format!(
                "column metadata has {} entries for {} columns",
                design.column_meta.len(),
                p
            )));
        }
        if design.values.iter().any(|v| !v.is_finite())
            || design.offset.iter().any(|v| !v.is_finite())
        {
            return Err(Error::InvalidSpec("design or offset contains non-finite values".into()));
        }
        family.validate_response(response.view())?;

        let n_intercepts = blocks.iter().filter(|b| b.is_intercept()).count();
        if n_intercepts != 1 {
            return Err(Error::InvalidSpec(format!(
                "expected exactly one intercept block, found {n_intercepts}"
            )));
        }

        // Blocks must tile [0, 1 + p) in order.
        let mut cursor = 0usize;
        for block in &blocks {
            if block.coef_range.start != cursor {
                return Err(Error::InvalidSpec(format!(
                    "block `{}` starts at coefficient {} but {} expected (blocks must be \
                     contiguous, disjoint and ordered)",
                    block.name, block.coef_range.start, cursor
                )));
            }
            if block.coef_range.end <= block.coef_range.start {
                return Err(Error::InvalidSpec(format!("block `{}` is empty", block.name)));
            }
            cursor = block.coef_range.end;
        }
        if cursor != p + 1 {
            return Err(Error::InvalidSpec(format!(
                "blocks cover {cursor} coefficients but the design implies {}",
                p + 1
            )));
        }

        let mut blocks = blocks;
        for block in &mut blocks {
            validate_block(&design, block)?;
        }

        let mut spec = Self { design, response, family, blocks };
        spec.recount_levels();
        Ok(spec)
    }

    pub fn design(&self) -> &DesignMatrix {
        &self.design
    }

    pub fn response(&self) -> &Array1<f64> {
        &self.response
    }

    pub fn family(&self) -> Family {
        self.family
    }

    pub fn blocks(&self) -> &[PredictorBlock] {
        &self.blocks
    }

    pub fn n(&self) -> usize {
        self.design.n()
    }

    pub fn p(&self) -> usize {
        self.design.p()
    }

    /// Length of the coefficient vector including the intercept.
    pub fn n_coefficients(&self) -> usize {
        self.p() + 1
    }

    /// `beta_0 + X beta + offset`
    pub fn linear_predictor(&self, beta: ArrayView1<f64>) -> Array1<f64> {
        debug_assert_eq!(beta.len(), self.n_coefficients());
        let slope = beta.slice(ndarray::s![1..]);
        let mut eta = self.design.values.dot(&slope);
        let b0 = beta[0];
        eta.zip_mut_with(&self.design.offset, |e, o| *e += b0 + o);
        eta
    }

    /// Row subset with level counts recomputed from the retained rows; the
    /// block layout is unchanged. Used for cross-validation splits.
    pub fn subset(&self, rows: &[usize]) -> ModelSpec {
        let design = DesignMatrix {
            values: self.design.values.select(Axis(0), rows),
            offset: self.design.offset.select(Axis(0), rows),
            column_meta: self.design.column_meta.clone(),
        };
        let response = self.response.select(Axis(0), rows);
        let mut spec =
            Self { design, response, family: self.family, blocks: self.blocks.clone() };
        spec.recount_levels();
        spec
    }

    /// Coefficients of one block.
    pub fn block_coefficients<'a>(
        &self,
        block: &PredictorBlock,
        beta: &'a Array1<f64>,
    ) -> ArrayView1<'a, f64> {
        beta.slice(ndarray::s![block.coef_range.clone()])
    }

    /// Per-level coefficient values for a block with level structure, with
    /// the reference level inserted as 0. Blocks without level structure get
    /// their raw coefficients.
    pub fn level_values(&self, block: &PredictorBlock, beta: &Array1<f64>) -> Vec<f64> {
        let coefs = self.block_coefficients(block, beta);
        match &block.levels {
            Some(info) => (0..info.n_levels())
                .map(|lv| info.level_column(lv).map_or(0.0, |c| coefs[c]))
                .collect(),
            None => coefs.to_vec(),
        }
    }

    /// Apply a per-column affine transform `(x - mean) / scale` in place.
    /// Used by the standardization step; level counts are unaffected because
    /// only non-dummy (Lasso / Group Lasso) columns carry non-identity
    /// entries in practice.
    pub(crate) fn apply_standardization(&mut self, record: &crate::standardize::StandardizationRecord) {
        for j in 0..self.p() {
            let (m, s) = (record.mean[j], record.scale[j]);
            if m != 0.0 || s != 1.0 {
                self.design.values.column_mut(j).mapv_inplace(|v| (v - m) / s);
            }
        }
    }

    fn recount_levels(&mut self) {
        let n = self.design.n();
        for block in &mut self.blocks {
            let cols = block.design_columns();
            if let Some(info) = &mut block.levels {
                let col_sums: Vec<usize> = cols
                    .clone()
                    .map(|c| {
                        self.design.values.column(c).iter().map(|v| *v as usize).sum::<usize>()
                    })
                    .collect();
                let mut counts = vec![0usize; info.n_levels()];
                let mut used = 0usize;
                for lv in 0..info.n_levels() {
                    if let Some(offset) = info.level_column(lv) {
                        counts[lv] = col_sums[offset];
                        used += col_sums[offset];
                    }
                }
                if let Some(r) = info.reference {
                    counts[r] = n - used;
                }
                info.counts = counts;
            }
        }
    }
}

fn validate_block(design: &DesignMatrix, block: &mut PredictorBlock) -> Result<()> {
    let name = block.name.clone();
    match block.penalty {
        PenaltyKind::None => {
            if block.coef_range != (0..1) {
                return Err(Error::InvalidSpec(format!(
                    "unpenalized block `{name}` must be the intercept (coefficient 0)"
                )));
            }
            if block.graph.is_some() || block.levels.is_some() {
                return Err(Error::InvalidSpec(format!(
                    "intercept block `{name}` cannot carry a graph or level structure"
                )));
            }
        }
        PenaltyKind::Lasso | PenaltyKind::GroupLasso => {
            if block.graph.is_some() {
                return Err(Error::InvalidSpec(format!(
                    "block `{name}` has a {:?} penalty and cannot carry a graph",
                    block.penalty
                )));
            }
            if let Some(info) = &block.levels {
                check_level_layout(design, block, info, &name)?;
                check_dummy_coding(design, block, info, &name)?;
            }
        }
        PenaltyKind::FusedLasso | PenaltyKind::GeneralizedFusedLasso => {
            let info = block.levels.as_ref().ok_or_else(|| {
                Error::InvalidSpec(format!(
                    "fused block `{name}` needs level structure (labels and level order)"
                ))
            })?;
            if info.n_levels() < 2 {
                return Err(Error::InvalidSpec(format!(
                    "fused block `{name}` needs at least 2 levels, got {}",
                    info.n_levels()
                )));
            }
            check_level_layout(design, block, info, &name)?;
            check_dummy_coding(design, block, info, &name)?;
            match (block.penalty, &block.graph) {
                (PenaltyKind::FusedLasso, None) => {
                    block.graph = Some(Graph::chain(info.n_levels())?);
                }
                (PenaltyKind::FusedLasso, Some(g)) => {
                    if g.kind() != GraphKind::Chain || g.n_levels() != info.n_levels() {
                        return Err(Error::InvalidSpec(format!(
                            "fused block `{name}` requires a chain graph over {} levels",
                            info.n_levels()
                        )));
                    }
                }
                (PenaltyKind::GeneralizedFusedLasso, None) => {
                    return Err(Error::InvalidSpec(format!(
                        "generalized fused block `{name}` needs a graph"
                    )));
                }
                (PenaltyKind::GeneralizedFusedLasso, Some(g)) => {
                    if g.n_levels() != info.n_levels() {
                        return Err(Error::InvalidGraph(format!(
                            "block `{name}`: graph is over {} levels but the block has {}",
                            g.n_levels(),
                            info.n_levels()
                        )));
                    }
                }
                _ => unreachable!(),
            }
        }
    }
    Ok(())
}

fn check_level_layout(
    _design: &DesignMatrix,
    block: &PredictorBlock,
    info: &LevelInfo,
    name: &str,
) -> Result<()> {
    if let Some(r) = info.reference {
        if r >= info.n_levels() {
            return Err(Error::InvalidSpec(format!(
                "block `{name}`: reference level {r} out of bounds for {} levels",
                info.n_levels()
            )));
        }
    }
    let expected = info.n_levels() - info.reference.map_or(0, |_| 1);
    if block.n_coefficients() != expected {
        return Err(Error::InvalidSpec(format!(
            "block `{name}`: {} levels with reference {:?} imply {expected} columns, block has {}",
            info.n_levels(),
            info.reference,
            block.n_coefficients()
        )));
    }
    Ok(())
}

fn check_dummy_coding(
    design: &DesignMatrix,
    block: &PredictorBlock,
    info: &LevelInfo,
    name: &str,
) -> Result<()> {
    let cols = block.design_columns();
    let sub = design.values.slice(ndarray::s![.., cols]);
    for v in sub.iter() {
        if *v != 0.0 && *v != 1.0 {
            return Err(Error::InvalidSpec(format!(
                "block `{name}` is declared with levels but is not dummy-coded (entry {v})"
            )));
        }
    }
    for row in sub.rows() {
        let s: f64 = row.sum();
        if s > 1.0 || (info.reference.is_none() && s != 1.0) {
            return Err(Error::InvalidSpec(format!(
                "block `{name}`: each observation must lie in exactly one level"
            )));
        }
    }
    Ok(())
}

/// Split a coefficient vector into per-block views.
pub fn partition<'a>(
    beta: &'a Array1<f64>,
    blocks: &[PredictorBlock],
) -> Result<Vec<ArrayView1<'a, f64>>> {
    let total = blocks.last().map_or(0, |b| b.coef_range.end);
    if beta.len() != total {
        return Err(Error::ShapeMismatch(format!(
            "coefficient vector has length {} but blocks cover {total}",
            beta.len()
        )));
    }
    Ok(blocks.iter().map(|b| beta.slice(ndarray::s![b.coef_range.clone()])).collect())
}

/// Concatenate per-block coefficient vectors back into one vector.
pub fn recombine(parts: &[Array1<f64>]) -> Array1<f64> {
    let total: usize = parts.iter().map(|p| p.len()).sum();
    let mut out = Array1::zeros(total);
    let mut cursor = 0;
    for part in parts {
        out.slice_mut(ndarray::s![cursor..cursor + part.len()]).assign(part);
        cursor += part.len();
    }
    out
}

/// Incrementally assemble a design matrix and its block layout.
pub struct ModelSpecBuilder {
    family: Family,
    response: Option<Array1<f64>>,
    offset: Option<Array1<f64>>,
    columns: Vec<Array1<f64>>,
    column_meta: Vec<ColumnMeta>,
    blocks: Vec<PredictorBlock>,
    cursor: usize,
}

impl ModelSpecBuilder {
    pub fn new(family: Family) -> Self {
        let intercept = PredictorBlock {
            name: "(intercept)".into(),
            penalty: PenaltyKind::None,
            coef_range: 0..1,
            graph: None,
            levels: None,
        };
        Self {
            family,
            response: None,
            offset: None,
            columns: Vec::new(),
            column_meta: Vec::new(),
            blocks: vec![intercept],
            cursor: 1,
        }
    }

    pub fn response(mut self, y: Array1<f64>) -> Self {
        self.response = Some(y);
        self
    }

    pub fn offset(mut self, offset: Array1<f64>) -> Self {
        self.offset = Some(offset);
        self
    }

    /// Add a block of numeric columns (continuous predictors or pre-encoded
    /// designs) under a Lasso or Group Lasso penalty.
    pub fn add_numeric(
        mut self,
        name: &str,
        columns: Vec<(String, Array1<f64>)>,
        penalty: PenaltyKind,
    ) -> Self {
        let k = columns.len();
        for (label, col) in columns {
            self.column_meta.push(ColumnMeta { predictor: name.into(), level: label });
            self.columns.push(col);
        }
        self.blocks.push(PredictorBlock {
            name: name.into(),
            penalty,
            coef_range: self.cursor..self.cursor + k,
            graph: None,
            levels: None,
        });
        self.cursor += k;
        self
    }

    /// Add a dummy-coded factor. `observation_level[i]` is the level index of
    /// observation `i` in the order given by `labels`. The reference level's
    /// column is omitted.
    pub fn add_factor(
        mut self,
        name: &str,
        labels: Vec<String>,
        observation_level: &[usize],
        penalty: PenaltyKind,
        graph: Option<Graph>,
        reference: Option<usize>,
    ) -> Self {
        let n_levels = labels.len();
        let n = observation_level.len();
        let info = LevelInfo { labels, counts: vec![0; n_levels], reference };
        let n_cols = n_levels - reference.map_or(0, |_| 1);
        let mut cols = vec![Array1::<f64>::zeros(n); n_cols];
        for (i, &lv) in observation_level.iter().enumerate() {
            if let Some(c) = info.level_column(lv.min(n_levels.saturating_sub(1))) {
                if lv < n_levels {
                    cols[c][i] = 1.0;
                }
            }
        }
        for (c, col) in cols.into_iter().enumerate() {
            let level_idx = (0..n_levels).find(|&lv| info.level_column(lv) == Some(c)).unwrap();
            self.column_meta.push(ColumnMeta {
                predictor: name.into(),
                level: info.labels[level_idx].clone(),
            });
            self.columns.push(col);
        }
        self.blocks.push(PredictorBlock {
            name: name.into(),
            penalty,
            coef_range: self.cursor..self.cursor + n_cols,
            graph,
            levels: Some(info),
        });
        self.cursor += n_cols;
        self
    }

    pub fn build(self) -> Result<ModelSpec> {
        let response = self
            .response
            .ok_or_else(|| Error::InvalidSpec("builder: response not set".into()))?;
        let n = response.len();
        let p = self.columns.len();
        let mut values = Array2::zeros((n, p));
        for (j, col) in self.columns.iter().enumerate() {
            if col.len() != n {
                return Err(Error::ShapeMismatch(format!(
                    "design column {j} has {} entries for {n} observations",
                    col.len()
                )));
            }
            values.column_mut(j).assign(col);
        }
        let offset = self.offset.unwrap_or_else(|| Array1::zeros(n));
        let design = DesignMatrix { values, offset, column_meta: self.column_meta };
        ModelSpec::new(design, response, self.family, self.blocks)
    }
}
