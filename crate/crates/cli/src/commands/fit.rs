use std::path::PathBuf;

use anyhow::Result;
use clap::Args;
use smurf_core::reestimate::{build_collapse_plan, reestimate_fit};
use smurf_core::solver::Fitter;
use smurf_core::weights::compute_weights;

use crate::config::ModelConfig;
use crate::data::{build_spec, DataTable};
use crate::output;

#[derive(Debug, Args)]
pub struct FitArgs {
    /// CSV data file with a header row.
    #[arg(long)]
    pub data: PathBuf,
    /// Model configuration (TOML).
    #[arg(long)]
    pub config: PathBuf,
    /// Tuning parameter of the fit.
    #[arg(long)]
    pub lambda: f64,
    /// Weight scheme override: eq | ad | st | ad.st.
    #[arg(long)]
    pub weights: Option<String>,
    /// Also refit without penalties on the collapsed design.
    #[arg(long)]
    pub reestimate: bool,
    /// Output directory.
    #[arg(long)]
    pub out: PathBuf,
}

pub fn run(args: &FitArgs) -> Result<i32> {
    let config = ModelConfig::load(&args.config)?;
    let table = DataTable::load(&args.data)?;
    let config_dir = args.config.parent().unwrap_or(std::path::Path::new(".")).to_path_buf();
    let spec = build_spec(&config, &table, &config_dir)?;

    let scheme = config.weight_scheme(args.weights.as_deref())?;
    let weight_options = config.weight_options();
    let settings = config.solver_settings();
    let weights = compute_weights(&spec, scheme, &weight_options)?;
    let fitter = Fitter::new(&spec, &weights, settings.clone())?;
    let fit = fitter.fit(args.lambda, None)?;

    std::fs::create_dir_all(&args.out)?;
    let reestimated = if args.reestimate {
        let plan = build_collapse_plan(&spec, &fit.coefficients, settings.fusion_tol);
        Some(reestimate_fit(&spec, &plan)?.coefficients)
    } else {
        None
    };
    output::write_coefficients_csv(
        &args.out.join("coefficients.csv"),
        &spec,
        &fit.coefficients,
        reestimated.as_ref(),
        settings.fusion_tol,
    )?;
    output::write_trace_csv(&args.out.join("trace.csv"), &fit)?;
    output::write_diagnostics_json(&args.out.join("diagnostics.json"), &spec, &fit)?;

    if fit.converged {
        log::info!("converged in {} iterations, objective {:.6e}", fit.iterations, fit.objective);
        Ok(0)
    } else {
        log::warn!("fit did not converge within {} iterations", fit.iterations);
        Ok(3)
    }
}
