//! CSV ingestion and design assembly from a model configuration.

use std::collections::HashMap;
use std::path::Path;

use anyhow::{anyhow, bail, Context, Result};
use ndarray::Array1;
use smurf_core::{ModelSpec, ModelSpecBuilder, PenaltyKind};

use crate::config::ModelConfig;

/// A CSV file as string columns.
pub struct DataTable {
    columns: HashMap<String, Vec<String>>,
}

impl DataTable {
    pub fn load(path: &Path) -> Result<Self> {
        let mut reader = csv::ReaderBuilder::new()
            .has_headers(true)
            .trim(csv::Trim::All)
            .from_path(path)
            .with_context(|| format!("cannot open {}", path.display()))?;
        let headers: Vec<String> =
            reader.headers().context("missing header row")?.iter().map(String::from).collect();
        let mut columns: HashMap<String, Vec<String>> =
            headers.iter().map(|h| (h.clone(), Vec::new())).collect();
        let mut n = 0usize;
        for record in reader.records() {
            let record = record.with_context(|| format!("malformed CSV in {}", path.display()))?;
            if record.len() != headers.len() {
                bail!(
                    "{}: line {}: expected {} fields, got {}",
                    path.display(),
                    record.position().map_or(0, |p| p.line()),
                    headers.len(),
                    record.len()
                );
            }
            for (h, field) in headers.iter().zip(record.iter()) {
                columns.get_mut(h).unwrap().push(field.to_string());
            }
            n += 1;
        }
        if n == 0 {
            bail!("{}: no data rows", path.display());
        }
        Ok(Self { columns })
    }

    pub fn column(&self, name: &str) -> Result<&[String]> {
        self.columns
            .get(name)
            .map(|v| v.as_slice())
            .ok_or_else(|| anyhow!("missing column `{name}`"))
    }

    pub fn numeric_column(&self, name: &str) -> Result<Array1<f64>> {
        let raw = self.column(name)?;
        let mut out = Array1::zeros(raw.len());
        for (i, v) in raw.iter().enumerate() {
            out[i] = v
                .parse::<f64>()
                .map_err(|_| anyhow!("column `{name}`, row {}: `{v}` is not numeric", i + 2))?;
        }
        Ok(out)
    }
}

/// Distinct values in numeric order when they all parse as numbers,
/// lexicographic otherwise.
fn default_level_order(values: &[String]) -> Vec<String> {
    let mut distinct: Vec<String> = Vec::new();
    let mut seen = std::collections::HashSet::new();
    for v in values {
        if seen.insert(v.clone()) {
            distinct.push(v.clone());
        }
    }
    let numeric: Option<Vec<f64>> = distinct.iter().map(|v| v.parse::<f64>().ok()).collect();
    match numeric {
        Some(nums) => {
            let mut order: Vec<usize> = (0..distinct.len()).collect();
            order.sort_by(|&a, &b| nums[a].partial_cmp(&nums[b]).unwrap());
            order.into_iter().map(|i| distinct[i].clone()).collect()
        }
        None => {
            distinct.sort();
            distinct
        }
    }
}

/// Assemble a validated model from config and data.
pub fn build_spec(config: &ModelConfig, table: &DataTable, config_dir: &Path) -> Result<ModelSpec> {
    let family = config.family()?;
    let y = table.numeric_column(&config.response)?;

    let mut builder = ModelSpecBuilder::new(family).response(y);
    if let Some(offset_col) = &config.offset {
        let mut offset = table.numeric_column(offset_col)?;
        if config.offset_log {
            for (i, v) in offset.iter_mut().enumerate() {
                if *v <= 0.0 {
                    bail!("offset column `{offset_col}`, row {}: exposure must be positive to take logs", i + 2);
                }
                *v = v.ln();
            }
        }
        builder = builder.offset(offset);
    }

    for predictor in &config.predictors {
        let penalty = predictor.penalty()?;
        match (&predictor.column, &predictor.columns) {
            (Some(factor_col), None) => {
                let raw = table.column(factor_col)?;
                let labels = match &predictor.levels {
                    Some(levels) => levels.clone(),
                    None => default_level_order(raw),
                };
                let index: HashMap<&str, usize> =
                    labels.iter().enumerate().map(|(i, l)| (l.as_str(), i)).collect();
                let mut obs = Vec::with_capacity(raw.len());
                for (i, v) in raw.iter().enumerate() {
                    let idx = *index.get(v.as_str()).ok_or_else(|| {
                        anyhow!(
                            "predictor `{}`, row {}: value `{v}` is not a declared level",
                            predictor.name,
                            i + 2
                        )
                    })?;
                    obs.push(idx);
                }
                let reference = match &predictor.reference {
                    Some(r) => Some(*index.get(r.as_str()).ok_or_else(|| {
                        anyhow!("predictor `{}`: reference `{r}` is not a level", predictor.name)
                    })?),
                    None => None,
                };
                let graph = predictor.build_graph(labels.len(), config_dir)?;
                builder =
                    builder.add_factor(&predictor.name, labels, &obs, penalty, graph, reference);
            }
            (None, Some(cols)) => {
                if matches!(
                    penalty,
                    PenaltyKind::FusedLasso | PenaltyKind::GeneralizedFusedLasso
                ) {
                    bail!(
                        "predictor `{}`: fused penalties need a factor column with levels",
                        predictor.name
                    );
                }
                let mut numeric = Vec::with_capacity(cols.len());
                for c in cols {
                    numeric.push((c.clone(), table.numeric_column(c)?));
                }
                builder = builder.add_numeric(&predictor.name, numeric, penalty);
            }
            _ => bail!(
                "predictor `{}`: declare exactly one of `column` (factor) or `columns` (numeric)",
                predictor.name
            ),
        }
    }

    Ok(builder.build()?)
}
