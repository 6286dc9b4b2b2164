use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::Args;

#[derive(Debug, Args)]
pub struct ReportArgs {
    /// Directory written by `smurf fit` or `smurf tune` (coefficients.csv,
    /// trace.csv, diagnostics.json).
    #[arg(long)]
    pub fit: Option<PathBuf>,
    /// Directory written by `smurf tune` (path.csv, selected.json).
    #[arg(long)]
    pub tune: Option<PathBuf>,
    /// Output directory for the plot-ready tables.
    #[arg(long)]
    pub out: PathBuf,
}

fn copy_csv(src: &Path, dst: &Path) -> Result<usize> {
    let mut reader = csv::Reader::from_path(src)
        .with_context(|| format!("missing artifact {}", src.display()))?;
    let mut writer = csv::Writer::from_path(dst)?;
    writer.write_record(reader.headers()?)?;
    let mut rows = 0;
    for record in reader.records() {
        writer.write_record(&record?)?;
        rows += 1;
    }
    writer.flush()?;
    Ok(rows)
}

/// Re-emit fit/tune artifacts as tidy plot-ready tables: the per-level
/// coefficient estimates (regularized and, when present, re-estimated), the
/// objective trace and the lambda path.
pub fn run(args: &ReportArgs) -> Result<i32> {
    if args.fit.is_none() && args.tune.is_none() {
        bail!("report needs --fit and/or --tune");
    }
    std::fs::create_dir_all(&args.out)?;
    if let Some(fit_dir) = &args.fit {
        let rows = copy_csv(
            &fit_dir.join("coefficients.csv"),
            &args.out.join("coefficient_estimates.csv"),
        )?;
        log::info!("coefficient table: {rows} level rows");
        copy_csv(&fit_dir.join("trace.csv"), &args.out.join("objective_trace.csv"))?;
        let diagnostics = fit_dir.join("diagnostics.json");
        if diagnostics.exists() {
            std::fs::copy(&diagnostics, args.out.join("diagnostics.json"))?;
        }
    }
    if let Some(tune_dir) = &args.tune {
        let rows = copy_csv(&tune_dir.join("path.csv"), &args.out.join("lambda_path.csv"))?;
        log::info!("lambda path: {rows} rows");
        let selected = tune_dir.join("selected.json");
        if selected.exists() {
            std::fs::copy(&selected, args.out.join("selected.json"))?;
        }
    }
    Ok(0)
}
