//! Model configuration file (TOML): family, response/offset columns, one
//! block per predictor with its penalty, level order, fusion graph and
//! reference level, plus optional solver and tuning overrides. Unknown keys
//! are rejected.

use std::path::Path;

use anyhow::{bail, Context, Result};
use serde::Deserialize;
use smurf_core::solver::SolverSettings;
use smurf_core::weights::{WeightOptions, WeightScheme};
use smurf_core::{Family, Graph, PenaltyKind};

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelConfig {
    /// gaussian | binomial | poisson
    pub family: String,
    /// Response column name.
    pub response: String,
    /// Optional offset column (linear-predictor scale unless `offset_log`).
    pub offset: Option<String>,
    /// Interpret the offset column as an exposure and take its logarithm.
    #[serde(default)]
    pub offset_log: bool,
    /// Penalty weight scheme: eq | ad | st | ad.st (default eq).
    pub weights: Option<String>,
    pub weight_cap: Option<f64>,
    /// Ridge penalty of the initial fit behind adaptive weights.
    pub adaptive_ridge: Option<f64>,
    pub solver: Option<SolverConfig>,
    pub tuning: Option<TuningConfig>,
    #[serde(rename = "predictor")]
    pub predictors: Vec<PredictorConfig>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolverConfig {
    pub eps: Option<f64>,
    pub max_iter: Option<usize>,
    pub tau: Option<f64>,
    pub step_init: Option<f64>,
    pub step_floor: Option<f64>,
    pub standardize: Option<bool>,
    pub fusion_tol: Option<f64>,
    pub admm_max_iter: Option<usize>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TuningConfig {
    pub grid_count: Option<usize>,
    pub grid_ratio: Option<f64>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PredictorConfig {
    pub name: String,
    /// Factor mode: one data column holding level labels.
    pub column: Option<String>,
    /// Numeric mode: data columns used as-is.
    pub columns: Option<Vec<String>>,
    /// Explicit level order (factor mode); defaults to the distinct values
    /// sorted numerically when they all parse as numbers, lexicographically
    /// otherwise.
    pub levels: Option<Vec<String>>,
    /// lasso | grouplasso | fused | gflasso
    pub penalty: String,
    /// Reference level label (factor mode).
    pub reference: Option<String>,
    /// chain | complete | grid | edgelist (gflasso only; fused implies chain)
    pub graph: Option<String>,
    /// Grid dimensions [rows, cols] for `graph = "grid"`.
    pub grid: Option<[usize; 2]>,
    /// Edge-list file path for `graph = "edgelist"`, one `i,l` pair per line.
    pub edges: Option<String>,
}

impl ModelConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .with_context(|| format!("cannot read config {}", path.display()))?;
        let config: ModelConfig = toml::from_str(&text)
            .with_context(|| format!("cannot parse config {}", path.display()))?;
        if config.predictors.is_empty() {
            bail!("config declares no predictors");
        }
        Ok(config)
    }

    pub fn family(&self) -> Result<Family> {
        match self.family.as_str() {
            "gaussian" => Ok(Family::Gaussian),
            "binomial" => Ok(Family::Binomial),
            "poisson" => Ok(Family::Poisson),
            other => bail!("unknown family `{other}` (expected gaussian, binomial or poisson)"),
        }
    }

    pub fn weight_scheme(&self, override_scheme: Option<&str>) -> Result<WeightScheme> {
        let name = override_scheme.or(self.weights.as_deref()).unwrap_or("eq");
        Ok(WeightScheme::parse(name)?)
    }

    pub fn weight_options(&self) -> WeightOptions {
        let mut options = WeightOptions::default();
        if let Some(cap) = self.weight_cap {
            options.cap = cap;
        }
        if let Some(ridge) = self.adaptive_ridge {
            options.ridge = ridge;
        }
        options.standardize = self.solver_settings().standardize;
        options
    }

    pub fn solver_settings(&self) -> SolverSettings {
        let mut settings = SolverSettings::default();
        if let Some(s) = &self.solver {
            if let Some(v) = s.eps {
                settings.eps = v;
            }
            if let Some(v) = s.max_iter {
                settings.max_iter = v;
            }
            if let Some(v) = s.tau {
                settings.tau = v;
            }
            if let Some(v) = s.step_init {
                settings.step_init = Some(v);
            }
            if let Some(v) = s.step_floor {
                settings.step_floor = v;
            }
            if let Some(v) = s.standardize {
                settings.standardize = v;
            }
            if let Some(v) = s.fusion_tol {
                settings.fusion_tol = v;
            }
            if let Some(v) = s.admm_max_iter {
                settings.admm.max_iter = v;
            }
        }
        settings
    }

    pub fn grid_params(&self) -> (usize, f64) {
        let count = self.tuning.as_ref().and_then(|t| t.grid_count).unwrap_or(50);
        let ratio = self.tuning.as_ref().and_then(|t| t.grid_ratio).unwrap_or(1e-4);
        (count, ratio)
    }
}

impl PredictorConfig {
    pub fn penalty(&self) -> Result<PenaltyKind> {
        match self.penalty.as_str() {
            "lasso" => Ok(PenaltyKind::Lasso),
            "grouplasso" => Ok(PenaltyKind::GroupLasso),
            "fused" => Ok(PenaltyKind::FusedLasso),
            "gflasso" => Ok(PenaltyKind::GeneralizedFusedLasso),
            other => bail!(
                "predictor `{}`: unknown penalty `{other}` (expected lasso, grouplasso, fused or gflasso)",
                self.name
            ),
        }
    }

    /// Build the fusion graph for a factor with `n_levels` levels.
    pub fn build_graph(&self, n_levels: usize, config_dir: &Path) -> Result<Option<Graph>> {
        let penalty = self.penalty()?;
        match penalty {
            PenaltyKind::FusedLasso => {
                if let Some(g) = &self.graph {
                    if g != "chain" {
                        bail!("predictor `{}`: fused penalty implies a chain graph", self.name);
                    }
                }
                Ok(Some(Graph::chain(n_levels)?))
            }
            PenaltyKind::GeneralizedFusedLasso => {
                let kind = self.graph.as_deref().ok_or_else(|| {
                    anyhow::anyhow!("predictor `{}`: gflasso needs a graph", self.name)
                })?;
                let graph = match kind {
                    "chain" => Graph::chain(n_levels)?,
                    "complete" => Graph::complete(n_levels)?,
                    "grid" => {
                        let [rows, cols] = self.grid.ok_or_else(|| {
                            anyhow::anyhow!(
                                "predictor `{}`: graph = \"grid\" needs grid = [rows, cols]",
                                self.name
                            )
                        })?;
                        if rows * cols != n_levels {
                            bail!(
                                "predictor `{}`: grid {rows}x{cols} does not match {} levels",
                                self.name,
                                n_levels
                            );
                        }
                        Graph::grid(rows, cols)?
                    }
                    "edgelist" => {
                        let rel = self.edges.as_deref().ok_or_else(|| {
                            anyhow::anyhow!(
                                "predictor `{}`: graph = \"edgelist\" needs an edges path",
                                self.name
                            )
                        })?;
                        let path = config_dir.join(rel);
                        let text = std::fs::read_to_string(&path).with_context(|| {
                            format!("cannot read edge list {}", path.display())
                        })?;
                        Graph::parse_edge_list(n_levels, &text)?
                    }
                    other => bail!(
                        "predictor `{}`: unknown graph kind `{other}` (expected chain, complete, grid or edgelist)",
                        self.name
                    ),
                };
                Ok(Some(graph))
            }
            _ => {
                if self.graph.is_some() {
                    bail!(
                        "predictor `{}`: penalty `{}` does not take a graph",
                        self.name,
                        self.penalty
                    );
                }
                Ok(None)
            }
        }
    }
}
