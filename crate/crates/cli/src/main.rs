//! `smurf`: fit, tune, simulate, study and report for sparse multi-type
//! regularized GLMs.
//!
//! Exit codes: 0 success, 2 input/configuration error, 3 fit did not
//! converge (outputs are still written), 4 numerical failure.

mod commands;
mod config;
mod data;
mod output;

use clap::{Parser, Subcommand};

#[derive(Parser)]
#[command(
    name = "smurf",
    version,
    about = "Sparse multi-type regularized GLM fitting: predictor selection and level fusion"
)]
struct Cli {
    /// Worker threads for concurrent folds and replicates (default: all
    /// available processors).
    #[arg(long, global = true)]
    jobs: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Fit the model at a single tuning-parameter value.
    Fit(commands::fit::FitArgs),
    /// Tune the penalty strength over a lambda grid and fit the selection.
    Tune(commands::tune::TuneArgs),
    /// Generate a credit-scoring data set with known coefficients.
    Simulate(commands::simulate::SimulateArgs),
    /// Run the simulation study over weight-scheme x tuning settings.
    Study(commands::study::StudyArgs),
    /// Re-emit fit/tune artifacts as plot-ready tables.
    Report(commands::report::ReportArgs),
}

fn exit_code_for(err: &anyhow::Error) -> i32 {
    match err.downcast_ref::<smurf_core::Error>() {
        Some(smurf_core::Error::Numerical(_)) | Some(smurf_core::Error::SingularSystem(_)) => 4,
        _ => 2,
    }
}

fn main() {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = Cli::parse();
    if let Some(jobs) = cli.jobs {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(jobs).build_global() {
            eprintln!("error: cannot configure {jobs} worker threads: {e}");
            std::process::exit(2);
        }
    }
    let result = match &cli.command {
        Command::Fit(args) => commands::fit::run(args),
        Command::Tune(args) => commands::tune::run(args),
        Command::Simulate(args) => commands::simulate::run(args),
        Command::Study(args) => commands::study::run(args),
        Command::Report(args) => commands::report::run(args),
    };
    match result {
        Ok(code) => std::process::exit(code),
        Err(err) => {
            eprintln!("error: {err:#}");
            std::process::exit(exit_code_for(&err));
        }
    }
}
