use std::path::PathBuf;

use anyhow::{Context, Result};
use clap::Args;
use smurf_core::sim::{
    self, age_labels, credit_model_spec, credit_true_beta, drink_labels, interaction_labels,
    loan_labels, prof_labels, salary_labels, sex_labels, stability_labels,
    simulate_credit_dataset, CreditDataset,
};

#[derive(Debug, Args)]
pub struct SimulateArgs {
    /// Number of observations.
    #[arg(long, default_value_t = 10_000)]
    pub n: usize,
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    /// Output directory (data.csv, config.toml, true_coefficients.csv).
    #[arg(long)]
    pub out: PathBuf,
}

fn write_data_csv(path: &std::path::Path, data: &CreditDataset) -> Result<()> {
    let mut w = csv::Writer::from_path(path)
        .with_context(|| format!("cannot write {}", path.display()))?;
    w.write_record([
        "paid", "age", "stability", "salary", "loan", "sex", "prof", "drink", "salxloan",
    ])?;
    let inter = interaction_labels();
    for i in 0..data.n() {
        w.write_record([
            data.paid[i].to_string(),
            data.age[i].to_string(),
            data.stability[i].to_string(),
            data.salary[i].to_string(),
            data.loan[i].to_string(),
            if data.male[i] { "male" } else { "female" }.to_string(),
            format!("p{}", data.prof[i] + 1),
            format!("d{}", data.drink[i] + 1),
            inter[data.interaction_cell(i)].clone(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

fn toml_levels(labels: &[String]) -> String {
    let quoted: Vec<String> = labels.iter().map(|l| format!("\"{l}\"")).collect();
    format!("[{}]", quoted.join(", "))
}

/// The canonical model configuration matching the generated columns.
fn canonical_config() -> String {
    let mut out = String::new();
    out.push_str("family = \"binomial\"\n");
    out.push_str("response = \"paid\"\n");
    out.push_str("weights = \"ad.st\"\n\n");
    let factor = |name: &str, column: &str, labels: &[String], penalty: &str, reference: Option<&str>, graph: Option<&str>, grid: Option<(usize, usize)>| {
        let mut s = String::new();
        s.push_str("[[predictor]]\n");
        s.push_str(&format!("name = \"{name}\"\n"));
        s.push_str(&format!("column = \"{column}\"\n"));
        s.push_str(&format!("levels = {}\n", toml_levels(labels)));
        s.push_str(&format!("penalty = \"{penalty}\"\n"));
        if let Some(r) = reference {
            s.push_str(&format!("reference = \"{r}\"\n"));
        }
        if let Some(g) = graph {
            s.push_str(&format!("graph = \"{g}\"\n"));
        }
        if let Some((rows, cols)) = grid {
            s.push_str(&format!("grid = [{rows}, {cols}]\n"));
        }
        s.push('\n');
        s
    };
    out.push_str(&factor("age", "age", &age_labels(), "fused", Some("20"), None, None));
    out.push_str(&factor("stability", "stability", &stability_labels(), "fused", Some("0"), None, None));
    out.push_str(&factor("salary", "salary", &salary_labels(), "fused", Some("1000"), None, None));
    out.push_str(&factor("loan", "loan", &loan_labels(), "fused", Some("100"), None, None));
    out.push_str(&factor("sex", "sex", &sex_labels(), "lasso", Some("female"), None, None));
    out.push_str(&factor("prof", "prof", &prof_labels(), "gflasso", Some("p1"), Some("complete"), None));
    out.push_str(&factor("drink", "drink", &drink_labels(), "grouplasso", None, None, None));
    out.push_str(&factor(
        "salxloan",
        "salxloan",
        &interaction_labels(),
        "gflasso",
        None,
        Some("grid"),
        Some((sim::GRID_ROWS, sim::GRID_COLS)),
    ));
    out
}

pub fn run(args: &SimulateArgs) -> Result<i32> {
    let data = simulate_credit_dataset(args.n, args.seed);
    std::fs::create_dir_all(&args.out)?;
    write_data_csv(&args.out.join("data.csv"), &data)?;
    std::fs::write(args.out.join("config.toml"), canonical_config())?;

    // the per-level true coefficients, in the canonical layout
    let spec = credit_model_spec(&data)?;
    let beta = credit_true_beta();
    let mut w = csv::Writer::from_path(args.out.join("true_coefficients.csv"))?;
    w.write_record(["predictor", "level", "coefficient"])?;
    for block in spec.blocks() {
        let values = spec.level_values(block, &beta);
        for (lv, v) in values.iter().enumerate() {
            let label = match &block.levels {
                Some(info) => info.labels[lv].clone(),
                None => String::new(),
            };
            w.write_record([block.name.clone(), label, v.to_string()])?;
        }
    }
    w.flush()?;

    let prevalence = 1.0 - data.paid.iter().map(|&p| p as f64).sum::<f64>() / data.n() as f64;
    log::info!("simulated {} observations, late-payment prevalence {prevalence:.4}", data.n());
    Ok(0)
}
