//! Artifact writers: coefficient tables, iteration traces, diagnostics,
//! tuning paths and study reports. Floats are written with Rust's shortest
//! round-trip formatting, so reloading reproduces them bit for bit.

use std::path::Path;

use anyhow::{Context, Result};
use ndarray::Array1;
use smurf_core::reestimate::fusion_groups;
use smurf_core::sim::StudyReport;
use smurf_core::solver::FitResult;
use smurf_core::tuning::{df_estimate, TuningResult};
use smurf_core::{predict_mean, ModelSpec};

/// Per-level coefficient table: one row per level of every block (reference
/// levels included at coefficient 0), one row for the intercept, one row per
/// numeric column.
pub fn write_coefficients_csv(
    path: &Path,
    spec: &ModelSpec,
    beta: &Array1<f64>,
    reestimated: Option<&Array1<f64>>,
    fusion_tol: f64,
) -> Result<()> {
    let groups = fusion_groups(spec, beta, fusion_tol);
    let regroups = reestimated.map(|b| fusion_groups(spec, b, fusion_tol));
    let mut w = csv::Writer::from_path(path)
        .with_context(|| format!("cannot write {}", path.display()))?;
    let mut header = vec!["predictor", "level", "is_reference", "coefficient"];
    if reestimated.is_some() {
        header.push("coefficient_reestimated");
    }
    header.extend_from_slice(&["fused_group", "is_zero"]);
    w.write_record(&header)?;

    for (b, block) in spec.blocks().iter().enumerate() {
        let values = spec.level_values(block, beta);
        let revalues = reestimated.map(|r| spec.level_values(block, r));
        let group = &groups[b];
        for (lv, &value) in values.iter().enumerate() {
            let (label, is_ref) = match &block.levels {
                Some(info) => (
                    info.labels[lv].clone(),
                    info.reference == Some(lv),
                ),
                None => {
                    if block.is_intercept() {
                        (String::new(), false)
                    } else {
                        let col = block.design_columns().start + lv;
                        (spec.design().column_meta[col].level.clone(), false)
                    }
                }
            };
            let mut record = vec![
                block.name.clone(),
                label,
                is_ref.to_string(),
                value.to_string(),
            ];
            if let Some(re) = &revalues {
                record.push(re[lv].to_string());
            }
            record.push(group.group_of[lv].to_string());
            // a reestimated fit shares the zero/fusion pattern by construction
            let zero = regroups
                .as_ref()
                .map_or(group.is_zero[lv], |g| g[b].is_zero[lv] && group.is_zero[lv]);
            record.push(zero.to_string());
            w.write_record(&record)?;
        }
    }
    w.flush()?;
    Ok(())
}

pub fn write_trace_csv(path: &Path, fit: &FitResult) -> Result<()> {
    let mut w = csv::Writer::from_path(path)
        .with_context(|| format!("cannot write {}", path.display()))?;
    w.write_record(["iteration", "objective", "step", "restarts"])?;
    for rec in &fit.trace {
        w.write_record([
            rec.iteration.to_string(),
            rec.objective.to_string(),
            rec.step.to_string(),
            rec.restarts.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_diagnostics_json(path: &Path, spec: &ModelSpec, fit: &FitResult) -> Result<()> {
    let mu = predict_mean(spec, fit.coefficients.view());
    let log_likelihood = spec.family().log_likelihood(spec.response().view(), mu.view());
    let df = df_estimate(spec, &fit.coefficients, 1e-7);
    let value = serde_json::json!({
        "lambda": fit.lambda,
        "objective": fit.objective,
        "loss": fit.loss,
        "penalty": fit.penalty,
        "iterations": fit.iterations,
        "converged": fit.converged,
        "step_final": fit.step_final,
        "restarts": fit.restarts,
        "admm_nonconverged": fit.admm_nonconverged,
        "df": df,
        "log_likelihood": log_likelihood,
        "deviance": -2.0 * log_likelihood,
        "family": spec.family().name(),
        "n": spec.n(),
        "p": spec.p(),
    });
    std::fs::write(path, serde_json::to_string_pretty(&value)?)
        .with_context(|| format!("cannot write {}", path.display()))?;
    Ok(())
}

pub fn write_path_csv(path: &Path, tuning: &TuningResult) -> Result<()> {
    let mut w = csv::Writer::from_path(path)
        .with_context(|| format!("cannot write {}", path.display()))?;
    w.write_record(["lambda", "criterion", "mean", "sd", "df"])?;
    for i in 0..tuning.lambdas.len() {
        w.write_record([
            tuning.lambdas[i].to_string(),
            tuning.criterion.name().to_string(),
            tuning.mean[i].to_string(),
            tuning.sd[i].to_string(),
            tuning.df[i].to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_selected_json(
    path: &Path,
    tuning: &TuningResult,
    method: &str,
    selected: f64,
) -> Result<()> {
    let value = serde_json::json!({
        "method": method,
        "criterion": tuning.criterion.name(),
        "selected_lambda": selected,
        "lambda_min": tuning.selected_min,
        "lambda_1se": tuning.selected_1se,
        "excluded_fits": tuning.excluded_fits,
    });
    std::fs::write(path, serde_json::to_string_pretty(&value)?)
        .with_context(|| format!("cannot write {}", path.display()))?;
    Ok(())
}

/// One tabular file per metric (setting, replicate, value), a rates table
/// and a median summary.
pub fn write_study_report(dir: &Path, report: &StudyReport) -> Result<()> {
    let scalar = |name: &str, get: &dyn Fn(&smurf_core::sim::StudyRow) -> String| -> Result<()> {
        let mut w = csv::Writer::from_path(dir.join(name))?;
        w.write_record(["setting", "replicate", "value"])?;
        for row in &report.rows {
            if row.failed {
                continue;
            }
            w.write_record([row.setting.clone(), row.replicate.to_string(), get(row)])?;
        }
        w.flush()?;
        Ok(())
    };
    scalar("mse.csv", &|r| r.mse.to_string())?;
    scalar("df.csv", &|r| r.df.to_string())?;
    scalar("auc.csv", &|r| r.auc.to_string())?;
    scalar("selected_lambda.csv", &|r| r.selected_lambda.to_string())?;

    let mut w = csv::Writer::from_path(dir.join("rates.csv"))?;
    w.write_record(["setting", "replicate", "predictor", "fpr", "fnr"])?;
    for row in &report.rows {
        for r in &row.rates {
            w.write_record([
                row.setting.clone(),
                row.replicate.to_string(),
                r.predictor.clone(),
                r.fpr.to_string(),
                r.fnr.to_string(),
            ])?;
        }
    }
    w.flush()?;

    let mut failures = csv::Writer::from_path(dir.join("failures.csv"))?;
    failures.write_record(["setting", "replicate", "message"])?;
    for row in report.rows.iter().filter(|r| r.failed) {
        failures.write_record([row.setting.clone(), row.replicate.to_string(), row.message.clone()])?;
    }
    failures.flush()?;

    // median summary per setting
    let mut settings: Vec<String> = report.rows.iter().map(|r| r.setting.clone()).collect();
    settings.sort();
    settings.dedup();
    let mut w = csv::Writer::from_path(dir.join("summary.csv"))?;
    w.write_record(["setting", "median_mse", "median_df", "median_auc", "oracle_auc"])?;
    for s in &settings {
        let med = |f: &dyn Fn(&smurf_core::sim::StudyRow) -> f64| {
            report.median(s, f).map_or(String::from("NA"), |v| v.to_string())
        };
        w.write_record([
            s.clone(),
            med(&|r| r.mse),
            med(&|r| r.df as f64),
            med(&|r| r.auc),
            report.oracle_auc.to_string(),
        ])?;
    }
    w.flush()?;

    let meta = serde_json::json!({
        "n_train": report.n_train,
        "n_holdout": report.n_holdout,
        "replicates": report.replicates,
        "oracle_auc": report.oracle_auc,
        "scale_note": "desk-scale defaults: 10 replicates of 10,000 train / 5,000 hold-out observations",
    });
    std::fs::write(dir.join("study.json"), serde_json::to_string_pretty(&meta)?)?;
    Ok(())
}
