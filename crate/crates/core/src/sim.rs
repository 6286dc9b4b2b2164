//! Credit-scoring simulation harness: a binomial model over seven predictors
//! plus a salary-by-loan interaction on a 7x10 grid, with a known sparse
//! true coefficient vector (225 coefficients, 17 unique nonzero groups).
//! Drives the end-to-end evaluation: weight scheme x tuning method studies
//! reporting coefficient MSE, selection/fusion error rates, degrees of
//! freedom and hold-out AUC against the true-coefficient oracle.

use ndarray::Array1;
use rand::prelude::*;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::family::{irls_fit, Family};
use crate::graph::Graph;
use crate::metrics::{coefficient_mse, fpr_fnr, roc_auc, PredictorRates};
use crate::model::{ModelSpec, ModelSpecBuilder, PenaltyKind};
use crate::reestimate::{build_collapse_plan, reestimate_fit};
use crate::solver::SolverSettings;
use crate::tuning::{
    cross_validate, default_lambda_grid, df_estimate, in_sample_tune, out_of_sample_tune,
    Criterion, TuningResult,
};
use crate::weights::{WeightOptions, WeightScheme};

pub const AGE_LEVELS: usize = 51; // ages 20..=70
pub const STABILITY_LEVELS: usize = 21; // 0..=20 years
pub const SALARY_LEVELS: usize = 41; // 1000..=5000 EUR, steps of 100
pub const LOAN_LEVELS: usize = 30; // 100..=3000 EUR, steps of 100
pub const PROF_LEVELS: usize = 10;
pub const DRINK_LEVELS: usize = 5;
pub const GRID_ROWS: usize = 7; // salary bands
pub const GRID_COLS: usize = 10; // loan bands

/// Total coefficient count of the canonical model (incl. intercept).
pub const N_COEFFICIENTS: usize = 225;

/// True number of unique nonzero coefficient groups.
pub const TRUE_DF: usize = 17;

fn age_effect(age: u32) -> f64 {
    match age {
        20..=25 => 0.0,
        26..=40 => 0.25,
        41..=60 => 0.5,
        _ => 0.75,
    }
}

fn stability_effect(years: u32) -> f64 {
    match years {
        0..=2 => 0.0,
        3..=6 => 0.3,
        _ => 0.5,
    }
}

fn salary_effect(salary: u32) -> f64 {
    match salary {
        1000..=1900 => 0.0,
        2000..=2900 => 0.4,
        3000..=3900 => 0.6,
        _ => 1.0,
    }
}

fn loan_effect(loan: u32) -> f64 {
    match loan {
        100..=500 => 0.0,
        600..=1000 => -0.2,
        1100..=1500 => -0.4,
        1600..=2000 => -0.6,
        2100..=2500 => -0.8,
        _ => -1.0,
    }
}

fn sex_effect(male: bool) -> f64 {
    if male {
        -0.3
    } else {
        0.0
    }
}

fn prof_effect(prof: usize) -> f64 {
    // 1-based level sets: 0 for {1,3,7}, 0.25 for {4,5,8,10}, 0.5 for {2,6,9}
    match prof + 1 {
        1 | 3 | 7 => 0.0,
        4 | 5 | 8 | 10 => 0.25,
        _ => 0.5,
    }
}

/// Salary band of the interaction grid. Band boundaries align with the high
/// interaction region, so each band lies entirely below or above 3500 EUR.
pub fn salary_band(salary: u32) -> usize {
    match salary {
        1000..=1500 => 0,
        1600..=2100 => 1,
        2200..=2700 => 2,
        2800..=3400 => 3,
        3500..=4000 => 4,
        4100..=4500 => 5,
        _ => 6,
    }
}

/// Loan band of the interaction grid; each band lies entirely below or above
/// 2000 EUR.
pub fn loan_band(loan: u32) -> usize {
    match loan {
        100..=300 => 0,
        400..=600 => 1,
        700..=900 => 2,
        1000..=1200 => 3,
        1300..=1500 => 4,
        1600..=1900 => 5,
        2000..=2200 => 6,
        2300..=2500 => 7,
        2600..=2800 => 8,
        _ => 9,
    }
}

fn interaction_effect(salary: u32, loan: u32) -> f64 {
    if salary >= 3500 && loan >= 2000 {
        0.5
    } else {
        0.0
    }
}

/// One simulated data set, stored by predictor.
#[derive(Debug, Clone)]
pub struct CreditDataset {
    pub age: Vec<u32>,
    pub stability: Vec<u32>,
    pub salary: Vec<u32>,
    pub loan: Vec<u32>,
    /// true = male
    pub male: Vec<bool>,
    /// 0-based profession level
    pub prof: Vec<usize>,
    /// 0-based drink level
    pub drink: Vec<usize>,
    /// 1 = all payments on time
    pub paid: Vec<u8>,
}

impl CreditDataset {
    pub fn n(&self) -> usize {
        self.paid.len()
    }

    /// Row-major interaction cell of observation `i`.
    pub fn interaction_cell(&self, i: usize) -> usize {
        salary_band(self.salary[i]) * GRID_COLS + loan_band(self.loan[i])
    }

    /// Linear predictor under the true coefficients.
    pub fn true_linear_predictor(&self) -> Array1<f64> {
        Array1::from_iter((0..self.n()).map(|i| {
            age_effect(self.age[i])
                + stability_effect(self.stability[i])
                + salary_effect(self.salary[i])
                + loan_effect(self.loan[i])
                + sex_effect(self.male[i])
                + prof_effect(self.prof[i])
                + interaction_effect(self.salary[i], self.loan[i])
        }))
    }
}

/// Draw a data set: predictors uniform over their levels (stability capped
/// at `age - 18` by rejection), response Bernoulli with the logistic score
/// of the true coefficients. Deterministic for a given seed.
pub fn simulate_credit_dataset(n: usize, seed: u64) -> CreditDataset {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut data = CreditDataset {
        age: Vec::with_capacity(n),
        stability: Vec::with_capacity(n),
        salary: Vec::with_capacity(n),
        loan: Vec::with_capacity(n),
        male: Vec::with_capacity(n),
        prof: Vec::with_capacity(n),
        drink: Vec::with_capacity(n),
        paid: Vec::with_capacity(n),
    };
    for _ in 0..n {
        let age = 20 + rng.gen_range(0..AGE_LEVELS as u32);
        let stability = loop {
            let s = rng.gen_range(0..STABILITY_LEVELS as u32);
            if s <= age - 18 {
                break s;
            }
        };
        let salary = 1000 + 100 * rng.gen_range(0..SALARY_LEVELS as u32);
        let loan = 100 + 100 * rng.gen_range(0..LOAN_LEVELS as u32);
        let male = rng.gen::<bool>();
        let prof = rng.gen_range(0..PROF_LEVELS);
        let drink = rng.gen_range(0..DRINK_LEVELS);

        let eta = age_effect(age)
            + stability_effect(stability)
            + salary_effect(salary)
            + loan_effect(loan)
            + sex_effect(male)
            + prof_effect(prof)
            + interaction_effect(salary, loan);
        let p = 1.0 / (1.0 + (-eta).exp());
        let paid = u8::from(rng.gen::<f64>() < p);

        data.age.push(age);
        data.stability.push(stability);
        data.salary.push(salary);
        data.loan.push(loan);
        data.male.push(male);
        data.prof.push(prof);
        data.drink.push(drink);
        data.paid.push(paid);
    }
    data
}

pub fn age_labels() -> Vec<String> {
    (20..=70).map(|a| a.to_string()).collect()
}

pub fn stability_labels() -> Vec<String> {
    (0..=20).map(|s| s.to_string()).collect()
}

pub fn salary_labels() -> Vec<String> {
    (0..SALARY_LEVELS).map(|i| (1000 + 100 * i).to_string()).collect()
}

pub fn loan_labels() -> Vec<String> {
    (0..LOAN_LEVELS).map(|i| (100 + 100 * i).to_string()).collect()
}

pub fn sex_labels() -> Vec<String> {
    vec!["female".into(), "male".into()]
}

pub fn prof_labels() -> Vec<String> {
    (1..=PROF_LEVELS).map(|p| format!("p{p}")).collect()
}

pub fn drink_labels() -> Vec<String> {
    (1..=DRINK_LEVELS).map(|d| format!("d{d}")).collect()
}

/// Row-major grid cell labels `s{row}l{col}`.
pub fn interaction_labels() -> Vec<String> {
    let mut labels = Vec::with_capacity(GRID_ROWS * GRID_COLS);
    for r in 0..GRID_ROWS {
        for c in 0..GRID_COLS {
            labels.push(format!("s{r}l{c}"));
        }
    }
    labels
}

/// The canonical model: Fused Lasso on age/stability/salary/loan (first
/// level as reference), Lasso on sex (reference female), Generalized Fused
/// Lasso over the complete graph on profession (reference p1), Group Lasso
/// on drink (no reference), 2-D grid fusion on the interaction (no
/// reference).
pub fn credit_model_spec(data: &CreditDataset) -> Result<ModelSpec> {
    let n = data.n();
    if n == 0 {
        return Err(Error::InvalidArgument("empty data set".into()));
    }
    let y = Array1::from_iter(data.paid.iter().map(|&p| p as f64));
    let age_obs: Vec<usize> = data.age.iter().map(|&a| (a - 20) as usize).collect();
    let stab_obs: Vec<usize> = data.stability.iter().map(|&s| s as usize).collect();
    let sal_obs: Vec<usize> = data.salary.iter().map(|&s| ((s - 1000) / 100) as usize).collect();
    let loan_obs: Vec<usize> = data.loan.iter().map(|&l| ((l - 100) / 100) as usize).collect();
    let sex_obs: Vec<usize> = data.male.iter().map(|&m| m as usize).collect();
    let cell_obs: Vec<usize> = (0..n).map(|i| data.interaction_cell(i)).collect();

    ModelSpecBuilder::new(Family::Binomial)
        .response(y)
        .add_factor("age", age_labels(), &age_obs, PenaltyKind::FusedLasso, None, Some(0))
        .add_factor(
            "stability",
            stability_labels(),
            &stab_obs,
            PenaltyKind::FusedLasso,
            None,
            Some(0),
        )
        .add_factor("salary", salary_labels(), &sal_obs, PenaltyKind::FusedLasso, None, Some(0))
        .add_factor("loan", loan_labels(), &loan_obs, PenaltyKind::FusedLasso, None, Some(0))
        .add_factor("sex", sex_labels(), &sex_obs, PenaltyKind::Lasso, None, Some(0))
        .add_factor(
            "prof",
            prof_labels(),
            &data.prof,
            PenaltyKind::GeneralizedFusedLasso,
            Some(Graph::complete(PROF_LEVELS)?),
            Some(0),
        )
        .add_factor("drink", drink_labels(), &data.drink, PenaltyKind::GroupLasso, None, None)
        .add_factor(
            "salxloan",
            interaction_labels(),
            &cell_obs,
            PenaltyKind::GeneralizedFusedLasso,
            Some(Graph::grid(GRID_ROWS, GRID_COLS)?),
            None,
        )
        .build()
}

/// The true coefficient vector in the canonical layout (length 225,
/// intercept 0).
pub fn credit_true_beta() -> Array1<f64> {
    let mut beta = Vec::with_capacity(N_COEFFICIENTS);
    beta.push(0.0); // intercept
    for age in 21..=70u32 {
        beta.push(age_effect(age));
    }
    for years in 1..=20u32 {
        beta.push(stability_effect(years));
    }
    for i in 1..SALARY_LEVELS {
        beta.push(salary_effect(1000 + 100 * i as u32));
    }
    for i in 1..LOAN_LEVELS {
        beta.push(loan_effect(100 + 100 * i as u32));
    }
    beta.push(sex_effect(true));
    for prof in 1..PROF_LEVELS {
        beta.push(prof_effect(prof));
    }
    for _ in 0..DRINK_LEVELS {
        beta.push(0.0);
    }
    for r in 0..GRID_ROWS {
        for c in 0..GRID_COLS {
            // bands r >= 4 lie entirely at salary >= 3500, c >= 6 at loan >= 2000
            beta.push(if r >= 4 && c >= 6 { 0.5 } else { 0.0 });
        }
    }
    Array1::from_vec(beta)
}

/// Tuning protocols of the study grid.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TuneMethod {
    InAic,
    InBic,
    OutDev,
    OutMspe,
    OutDss,
    Cv,
    Cv1se,
}

impl TuneMethod {
    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "in.AIC" => Ok(Self::InAic),
            "in.BIC" => Ok(Self::InBic),
            "out.dev" => Ok(Self::OutDev),
            "out.MSPE" => Ok(Self::OutMspe),
            "out.DSS" => Ok(Self::OutDss),
            "cv" => Ok(Self::Cv),
            "cv.1se" => Ok(Self::Cv1se),
            other => Err(Error::InvalidArgument(format!(
                "unknown tuning method `{other}` (expected in.AIC, in.BIC, out.dev, out.MSPE, out.DSS, cv or cv.1se)"
            ))),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Self::InAic => "in.AIC",
            Self::InBic => "in.BIC",
            Self::OutDev => "out.dev",
            Self::OutMspe => "out.MSPE",
            Self::OutDss => "out.DSS",
            Self::Cv => "cv",
            Self::Cv1se => "cv.1se",
        }
    }
}

/// One study setting `weights|tuning`.
#[derive(Debug, Clone, Copy)]
pub struct StudySetting {
    pub weights: WeightScheme,
    pub tune: TuneMethod,
}

impl StudySetting {
    pub fn parse(s: &str) -> Result<Self> {
        let (w, t) = s.split_once('|').ok_or_else(|| {
            Error::InvalidArgument(format!("setting `{s}` is not of the form weights|tuning"))
        })?;
        Ok(Self { weights: WeightScheme::parse(w)?, tune: TuneMethod::parse(t)? })
    }

    pub fn name(&self) -> String {
        format!("{}|{}", self.weights.name(), self.tune.name())
    }
}

/// Study configuration; the defaults are desk-scale (10 replicates of
/// 10,000 training and 5,000 hold-out observations).
#[derive(Debug, Clone)]
pub struct StudyConfig {
    pub settings: Vec<StudySetting>,
    pub replicates: usize,
    pub n_train: usize,
    pub n_holdout: usize,
    pub folds: usize,
    pub train_fraction: f64,
    pub seed: u64,
    pub grid_count: usize,
    pub grid_ratio: f64,
    pub solver: SolverSettings,
    pub weight_options: WeightOptions,
    /// Ridge of the unpenalized GLM baseline.
    pub baseline_ridge: f64,
    pub include_baseline: bool,
}

impl Default for StudyConfig {
    fn default() -> Self {
        Self {
            settings: vec![StudySetting { weights: WeightScheme::Combined, tune: TuneMethod::Cv1se }],
            replicates: 10,
            n_train: 10_000,
            n_holdout: 5_000,
            folds: 10,
            train_fraction: 0.75,
            seed: 20_08,
            grid_count: 50,
            grid_ratio: 1e-4,
            solver: SolverSettings::default(),
            weight_options: WeightOptions::default(),
            baseline_ridge: 1e-6,
            include_baseline: true,
        }
    }
}

/// One replicate's metrics for one setting.
#[derive(Debug, Clone)]
pub struct StudyRow {
    pub setting: String,
    pub replicate: usize,
    pub selected_lambda: f64,
    pub mse: f64,
    pub df: usize,
    pub auc: f64,
    pub rates: Vec<PredictorRates>,
    pub failed: bool,
    pub message: String,
}

#[derive(Debug, Clone)]
pub struct StudyReport {
    pub rows: Vec<StudyRow>,
    /// AUC of the true coefficients on the hold-out set.
    pub oracle_auc: f64,
    pub n_train: usize,
    pub n_holdout: usize,
    pub replicates: usize,
}

impl StudyReport {
    /// Median of a metric over the non-failed replicates of a setting.
    pub fn median<F: Fn(&StudyRow) -> f64>(&self, setting: &str, metric: F) -> Option<f64> {
        let mut values: Vec<f64> = self
            .rows
            .iter()
            .filter(|r| r.setting == setting && !r.failed)
            .map(&metric)
            .collect();
        if values.is_empty() {
            return None;
        }
        values.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let mid = values.len() / 2;
        Some(if values.len() % 2 == 1 {
            values[mid]
        } else {
            (values[mid - 1] + values[mid]) / 2.0
        })
    }
}

fn derive_seed(base: u64, stream: u64, idx: u64) -> u64 {
    // splitmix-style mixing for independent replicate streams
    let mut z = base ^ stream.wrapping_mul(0x9E3779B97F4A7C15) ^ idx.wrapping_mul(0xBF58476D1CE4E5B9);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58476D1CE4E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D049BB133111EB);
    z ^ (z >> 31)
}

/// Run one tuning protocol and return its result.
pub fn tune_credit(
    spec: &ModelSpec,
    setting: StudySetting,
    cfg: &StudyConfig,
    seed: u64,
) -> Result<TuningResult> {
    let weights = crate::weights::compute_weights(spec, setting.weights, &cfg.weight_options)?;
    let grid = default_lambda_grid(spec, &weights, &cfg.solver, cfg.grid_count, cfg.grid_ratio)?;
    match setting.tune {
        TuneMethod::InAic => in_sample_tune(
            spec,
            &grid,
            Criterion::Aic,
            setting.weights,
            &cfg.weight_options,
            &cfg.solver,
        ),
        TuneMethod::InBic => in_sample_tune(
            spec,
            &grid,
            Criterion::Bic,
            setting.weights,
            &cfg.weight_options,
            &cfg.solver,
        ),
        TuneMethod::OutDev | TuneMethod::OutMspe | TuneMethod::OutDss => {
            let criterion = match setting.tune {
                TuneMethod::OutDev => Criterion::Deviance,
                TuneMethod::OutMspe => Criterion::Mspe,
                _ => Criterion::Dss,
            };
            out_of_sample_tune(
                spec,
                &grid,
                cfg.train_fraction,
                criterion,
                setting.weights,
                &cfg.weight_options,
                &cfg.solver,
                seed,
            )
        }
        TuneMethod::Cv | TuneMethod::Cv1se => cross_validate(
            spec,
            &grid,
            cfg.folds,
            Criterion::Deviance,
            setting.weights,
            &cfg.weight_options,
            &cfg.solver,
            seed,
        ),
    }
}

fn evaluate_fit(
    spec: &ModelSpec,
    holdout: &CreditDataset,
    holdout_spec: &ModelSpec,
    beta: &Array1<f64>,
    tol: f64,
) -> Result<(f64, usize, f64, Vec<PredictorRates>)> {
    let beta_true = credit_true_beta();
    let mse = coefficient_mse(beta.view(), beta_true.view())?;
    let df = df_estimate(spec, beta, tol);
    let scores = holdout_spec.linear_predictor(beta.view());
    let labels: Vec<bool> = holdout.paid.iter().map(|&p| p == 1).collect();
    let auc = roc_auc(scores.as_slice().unwrap(), &labels)?;
    let rates = fpr_fnr(spec, beta, &beta_true, tol);
    Ok((mse, df, auc, rates))
}

/// Run the full study: for every (setting, replicate) simulate a training
/// set, tune lambda, refit without penalties on the collapsed design and
/// score against the truth and the shared hold-out set. Replicates run in
/// parallel; per-replicate failures are recorded and the study continues.
pub fn run_study(cfg: &StudyConfig) -> Result<StudyReport> {
    let holdout = simulate_credit_dataset(cfg.n_holdout, derive_seed(cfg.seed, 7, 0));
    let holdout_spec = credit_model_spec(&holdout)?;
    let oracle_scores = holdout.true_linear_predictor();
    let labels: Vec<bool> = holdout.paid.iter().map(|&p| p == 1).collect();
    let oracle_auc = roc_auc(oracle_scores.as_slice().unwrap(), &labels)?;

    let mut jobs: Vec<(StudySetting, usize)> = Vec::new();
    for &setting in &cfg.settings {
        for rep in 0..cfg.replicates {
            jobs.push((setting, rep));
        }
    }

    let mut rows: Vec<StudyRow> = jobs
        .par_iter()
        .map(|&(setting, rep)| {
            let name = setting.name();
            match run_replicate(cfg, setting, rep, &holdout, &holdout_spec) {
                Ok(row) => row,
                Err(e) => {
                    log::warn!("setting {name} replicate {rep} failed: {e}");
                    StudyRow {
                        setting: name,
                        replicate: rep,
                        selected_lambda: f64::NAN,
                        mse: f64::NAN,
                        df: 0,
                        auc: f64::NAN,
                        rates: vec![],
                        failed: true,
                        message: e.to_string(),
                    }
                }
            }
        })
        .collect();

    if cfg.include_baseline {
        let baseline: Vec<StudyRow> = (0..cfg.replicates)
            .into_par_iter()
            .map(|rep| run_baseline(cfg, rep, &holdout, &holdout_spec))
            .collect();
        rows.extend(baseline);
    }

    Ok(StudyReport {
        rows,
        oracle_auc,
        n_train: cfg.n_train,
        n_holdout: cfg.n_holdout,
        replicates: cfg.replicates,
    })
}

fn run_replicate(
    cfg: &StudyConfig,
    setting: StudySetting,
    rep: usize,
    holdout: &CreditDataset,
    holdout_spec: &ModelSpec,
) -> Result<StudyRow> {
    let data_seed = derive_seed(cfg.seed, 1, rep as u64);
    let tune_seed = derive_seed(cfg.seed, 2, rep as u64);
    let train = simulate_credit_dataset(cfg.n_train, data_seed);
    let spec = credit_model_spec(&train)?;

    let tuned = tune_credit(&spec, setting, cfg, tune_seed)?;
    let fit = if setting.tune == TuneMethod::Cv1se {
        tuned.fit_at_1se()
    } else {
        tuned.fit_at_min()
    };
    let selected_lambda =
        if setting.tune == TuneMethod::Cv1se { tuned.selected_1se } else { tuned.selected_min };

    let tol = cfg.solver.fusion_tol;
    let plan = build_collapse_plan(&spec, &fit.coefficients, tol);
    let refit = reestimate_fit(&spec, &plan)?;
    let (mse, df, auc, rates) = evaluate_fit(&spec, holdout, holdout_spec, &refit.coefficients, tol)?;

    Ok(StudyRow {
        setting: setting.name(),
        replicate: rep,
        selected_lambda,
        mse,
        df,
        auc,
        rates,
        failed: false,
        message: String::new(),
    })
}

fn run_baseline(
    cfg: &StudyConfig,
    rep: usize,
    holdout: &CreditDataset,
    holdout_spec: &ModelSpec,
) -> StudyRow {
    let name = "GLM.ridge".to_string();
    let data_seed = derive_seed(cfg.seed, 1, rep as u64);
    let train = simulate_credit_dataset(cfg.n_train, data_seed);
    let result = (|| -> Result<StudyRow> {
        let spec = credit_model_spec(&train)?;
        let fit = irls_fit(&spec, cfg.baseline_ridge)?;
        let tol = cfg.solver.fusion_tol;
        let (mse, df, auc, rates) =
            evaluate_fit(&spec, holdout, holdout_spec, &fit.coefficients, tol)?;
        Ok(StudyRow {
            setting: name.clone(),
            replicate: rep,
            selected_lambda: 0.0,
            mse,
            df,
            auc,
            rates,
            failed: false,
            message: String::new(),
        })
    })();
    result.unwrap_or_else(|e| StudyRow {
        setting: name,
        replicate: rep,
        selected_lambda: f64::NAN,
        mse: f64::NAN,
        df: 0,
        auc: f64::NAN,
        rates: vec![],
        failed: true,
        message: e.to_string(),
    })
}
