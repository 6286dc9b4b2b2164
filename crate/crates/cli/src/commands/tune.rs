use std::path::PathBuf;

use anyhow::Result;
use clap::Args;
use smurf_core::reestimate::{build_collapse_plan, reestimate_fit};
use smurf_core::sim::TuneMethod;
use smurf_core::tuning::{
    cross_validate, default_lambda_grid, in_sample_tune, out_of_sample_tune, Criterion,
    TuningResult,
};
use smurf_core::weights::compute_weights;
use smurf_core::ModelSpec;

use crate::config::ModelConfig;
use crate::data::{build_spec, DataTable};
use crate::output;

#[derive(Debug, Args)]
pub struct TuneArgs {
    /// CSV data file with a header row.
    #[arg(long)]
    pub data: PathBuf,
    /// Model configuration (TOML).
    #[arg(long)]
    pub config: PathBuf,
    /// Protocol: in.AIC | in.BIC | out.dev | out.MSPE | out.DSS | cv | cv.1se.
    #[arg(long)]
    pub method: String,
    /// Cross-validation folds.
    #[arg(long, default_value_t = 10)]
    pub folds: usize,
    /// Training fraction of the out-of-sample split.
    #[arg(long, default_value_t = 0.75)]
    pub split: f64,
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    /// Weight scheme override: eq | ad | st | ad.st.
    #[arg(long)]
    pub weights: Option<String>,
    /// Also refit the selected model without penalties on the collapsed design.
    #[arg(long)]
    pub reestimate: bool,
    /// Output directory.
    #[arg(long)]
    pub out: PathBuf,
}

fn run_protocol(
    method: TuneMethod,
    spec: &ModelSpec,
    args: &TuneArgs,
    config: &ModelConfig,
) -> Result<TuningResult> {
    let scheme = config.weight_scheme(args.weights.as_deref())?;
    let weight_options = config.weight_options();
    let settings = config.solver_settings();
    let (count, ratio) = config.grid_params();
    let weights = compute_weights(spec, scheme, &weight_options)?;
    let grid = default_lambda_grid(spec, &weights, &settings, count, ratio)?;

    let result = match method {
        TuneMethod::InAic => {
            in_sample_tune(spec, &grid, Criterion::Aic, scheme, &weight_options, &settings)?
        }
        TuneMethod::InBic => {
            in_sample_tune(spec, &grid, Criterion::Bic, scheme, &weight_options, &settings)?
        }
        TuneMethod::OutDev | TuneMethod::OutMspe | TuneMethod::OutDss => {
            let criterion = match method {
                TuneMethod::OutDev => Criterion::Deviance,
                TuneMethod::OutMspe => Criterion::Mspe,
                _ => Criterion::Dss,
            };
            out_of_sample_tune(
                spec,
                &grid,
                args.split,
                criterion,
                scheme,
                &weight_options,
                &settings,
                args.seed,
            )?
        }
        TuneMethod::Cv | TuneMethod::Cv1se => cross_validate(
            spec,
            &grid,
            args.folds,
            Criterion::Deviance,
            scheme,
            &weight_options,
            &settings,
            args.seed,
        )?,
    };
    Ok(result)
}

pub fn run(args: &TuneArgs) -> Result<i32> {
    let method = TuneMethod::parse(&args.method)?;
    let config = ModelConfig::load(&args.config)?;
    let table = DataTable::load(&args.data)?;
    let config_dir = args.config.parent().unwrap_or(std::path::Path::new(".")).to_path_buf();
    let spec = build_spec(&config, &table, &config_dir)?;
    let settings = config.solver_settings();

    let tuning = run_protocol(method, &spec, args, &config)?;
    let (selected, fit) = if method == TuneMethod::Cv1se {
        (tuning.selected_1se, tuning.fit_at_1se())
    } else {
        (tuning.selected_min, tuning.fit_at_min())
    };

    std::fs::create_dir_all(&args.out)?;
    output::write_path_csv(&args.out.join("path.csv"), &tuning)?;
    output::write_selected_json(&args.out.join("selected.json"), &tuning, method.name(), selected)?;

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
    output::write_trace_csv(&args.out.join("trace.csv"), fit)?;
    output::write_diagnostics_json(&args.out.join("diagnostics.json"), &spec, fit)?;

    log::info!(
        "method {}: selected lambda {:.6e} (min {:.6e}, 1se {:.6e})",
        method.name(),
        selected,
        tuning.selected_min,
        tuning.selected_1se
    );
    if fit.converged {
        Ok(0)
    } else {
        Ok(3)
    }
}
