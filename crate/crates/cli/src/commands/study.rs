use std::path::PathBuf;

use anyhow::Result;
use clap::Args;
use smurf_core::sim::{run_study, StudyConfig, StudySetting};

use crate::output;

#[derive(Debug, Args)]
pub struct StudyArgs {
    /// Comma-separated settings, each `weights|tuning`,
    /// e.g. `ad.st|cv.1se,eq|in.BIC`.
    #[arg(long, default_value = "ad.st|cv.1se")]
    pub settings: String,
    #[arg(long, default_value_t = 10)]
    pub replicates: usize,
    /// Training observations per replicate.
    #[arg(long, default_value_t = 10_000)]
    pub n: usize,
    /// Hold-out observations (simulated once, shared by all replicates).
    #[arg(long, default_value_t = 5_000)]
    pub holdout: usize,
    #[arg(long, default_value_t = 10)]
    pub folds: usize,
    #[arg(long, default_value_t = 2008)]
    pub seed: u64,
    #[arg(long, default_value_t = 50)]
    pub grid_count: usize,
    #[arg(long, default_value_t = 1e-4)]
    pub grid_ratio: f64,
    /// Skip the ridge-GLM baseline.
    #[arg(long)]
    pub no_baseline: bool,
    /// Output directory.
    #[arg(long)]
    pub out: PathBuf,
}

pub fn run(args: &StudyArgs) -> Result<i32> {
    let settings: Vec<StudySetting> = args
        .settings
        .split(',')
        .map(|s| StudySetting::parse(s.trim()))
        .collect::<smurf_core::Result<_>>()?;

    let mut cfg = StudyConfig::default();
    cfg.settings = settings;
    cfg.replicates = args.replicates;
    cfg.n_train = args.n;
    cfg.n_holdout = args.holdout;
    cfg.folds = args.folds;
    cfg.seed = args.seed;
    cfg.grid_count = args.grid_count;
    cfg.grid_ratio = args.grid_ratio;
    cfg.include_baseline = !args.no_baseline;

    let started = std::time::Instant::now();
    let report = run_study(&cfg)?;
    std::fs::create_dir_all(&args.out)?;
    output::write_study_report(&args.out, &report)?;

    println!(
        "study finished in {:.1}s: {} settings x {} replicates, oracle AUC {:.4}",
        started.elapsed().as_secs_f64(),
        cfg.settings.len(),
        cfg.replicates,
        report.oracle_auc
    );
    let mut names: Vec<String> = report.rows.iter().map(|r| r.setting.clone()).collect();
    names.sort();
    names.dedup();
    for name in names {
        let fmt = |v: Option<f64>| v.map_or("NA".into(), |v| format!("{v:.5}"));
        println!(
            "  {name}: median MSE {}, median df {}, median AUC {}",
            fmt(report.median(&name, |r| r.mse)),
            fmt(report.median(&name, |r| r.df as f64)),
            fmt(report.median(&name, |r| r.auc)),
        );
    }
    let failures = report.rows.iter().filter(|r| r.failed).count();
    if failures > 0 {
        log::warn!("{failures} replicate jobs failed; see failures.csv");
    }
    Ok(0)
}
