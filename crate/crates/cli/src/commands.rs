//! Command-line definitions and command implementations.

use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use philasso_core::decompose::{self, EquilibriumOptions};
use philasso_core::glm::{Dataset, Family};
use philasso_core::sim::ExperimentConfig;
use philasso_core::solver::{self, PhiLassoFit, SolverOptions};
use philasso_core::taxonomy::{parse_taxonomy, Taxonomy};
use philasso_core::tuning::{self, Folds};
use philasso_core::Error;
use serde::Serialize;

use crate::formats;
use crate::manifest::RunManifest;
use crate::{parallel, read_text, write_file, CliError};

/// Process exit status of a command that did not fail outright.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Outcome {
    Ok,
    /// Output was written but some fit or iteration did not converge.
    NotConverged,
}

impl Outcome {
    pub fn code(self) -> u8 {
        match self {
            Outcome::Ok => 0,
            Outcome::NotConverged => 2,
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "philasso", version, about = "Taxonomy-structured penalized GLM estimation")]
pub struct Cli {
    /// Seed for fold assignment and simulation (overrides config seeds).
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Worker threads for cross-validation and simulation.
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    /// Emit log records as JSON lines on standard error.
    #[arg(long, global = true)]
    pub json_logs: bool,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Fit at a single lambda.
    Fit(FitArgs),
    /// Fit a descending lambda grid with warm starts.
    Path(PathArgs),
    /// Cross-validate over a lambda grid and report selection frequencies.
    Cv(CvArgs),
    /// Run the replicate simulation experiment.
    Simulate(SimulateArgs),
    /// Penalty-minimizing decomposition of a coefficient vector.
    Decompose(DecomposeArgs),
    /// Classification and support-recovery metrics.
    Metrics(MetricsArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum FamilyArg {
    Gaussian,
    #[value(alias = "logit", alias = "binomial")]
    Logistic,
}

impl From<FamilyArg> for Family {
    fn from(f: FamilyArg) -> Family {
        match f {
            FamilyArg::Gaussian => Family::Gaussian,
            FamilyArg::Logistic => Family::Logistic,
        }
    }
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct DataArgs {
    /// Design TSV: covariate identifiers in the header, one sample per row.
    #[arg(long)]
    pub design: PathBuf,
    /// Responses, one value per line.
    #[arg(long)]
    pub response: PathBuf,
    /// Taxonomy TSV: index, one column per level, unit label.
    #[arg(long)]
    pub taxonomy: PathBuf,
    #[arg(long, value_enum)]
    pub family: FamilyArg,
    /// Fit without an intercept.
    #[arg(long)]
    pub no_intercept: bool,
    /// Divide every design row by its sum (relative abundances).
    #[arg(long)]
    pub normalize_rows: bool,
    /// TOML file with solver options (innerTol, outerTol, maxOuter, ...).
    #[arg(long)]
    pub solver_config: Option<PathBuf>,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct GridArgs {
    /// Number of grid points.
    #[arg(long, default_value_t = 50)]
    pub n_lambda: usize,
    /// Smallest lambda as a fraction of lambda_max.
    #[arg(long, default_value_t = 0.01)]
    pub min_ratio: f64,
    /// Explicit descending grid (overrides --n-lambda/--min-ratio).
    #[arg(long, value_delimiter = ',')]
    pub lambdas: Vec<f64>,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct FitArgs {
    #[command(flatten)]
    pub data: DataArgs,
    #[arg(long)]
    pub lambda: f64,
    /// Fit on columns scaled to unit variance (centered when an intercept is
    /// fitted); coefficients are reported on the original scale while the
    /// objective and KKT residual refer to the scaled problem.
    #[arg(long)]
    pub standardize: bool,
    /// Output file (standard output when omitted).
    #[arg(long)]
    #[serde(skip)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    #[serde(skip)]
    pub manifest: Option<PathBuf>,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct PathArgs {
    #[command(flatten)]
    pub data: DataArgs,
    #[command(flatten)]
    pub grid: GridArgs,
    /// See `fit --standardize`.
    #[arg(long)]
    pub standardize: bool,
    #[arg(long)]
    #[serde(skip)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    #[serde(skip)]
    pub manifest: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Criterion {
    Auc,
    Brier,
    Deviance,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct CvArgs {
    #[command(flatten)]
    pub data: DataArgs,
    #[command(flatten)]
    pub grid: GridArgs,
    /// `loo` or a fold count K (stratified by class for logistic data).
    #[arg(long, default_value = "loo")]
    pub folds: String,
    /// Selection criteria (default: auc,brier for logistic, deviance for
    /// Gaussian data).
    #[arg(long, value_enum, value_delimiter = ',')]
    pub select: Vec<Criterion>,
    #[arg(long)]
    #[serde(skip)]
    pub out_dir: PathBuf,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct SimulateArgs {
    /// Experiment config (TOML, or JSON by `.json` extension). Defaults to
    /// the desk-scale preset.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Use the full-size preset (p = 4096) when no config is given.
    #[arg(long)]
    pub extended: bool,
    #[arg(long)]
    #[serde(skip)]
    pub out_dir: PathBuf,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct DecomposeArgs {
    /// Coefficients, one value per line in taxonomy index order.
    #[arg(long)]
    pub beta: PathBuf,
    #[arg(long)]
    pub taxonomy: PathBuf,
    #[arg(long, default_value_t = 1.0)]
    pub q: f64,
    #[arg(long, default_value_t = 1e-10)]
    pub tol: f64,
    #[arg(long, default_value_t = 10_000)]
    pub max_sweeps: usize,
    #[arg(long)]
    #[serde(skip)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    #[serde(skip)]
    pub manifest: Option<PathBuf>,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct MetricsArgs {
    /// Predicted probabilities, one per line.
    #[arg(long, requires = "labels")]
    pub predictions: Option<PathBuf>,
    /// Binary outcomes, one per line.
    #[arg(long, requires = "predictions")]
    pub labels: Option<PathBuf>,
    /// Estimated coefficients, one per line.
    #[arg(long, requires = "truth")]
    pub estimate: Option<PathBuf>,
    /// True coefficients, one per line.
    #[arg(long, requires = "estimate")]
    pub truth: Option<PathBuf>,
    #[arg(long)]
    #[serde(skip)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    #[serde(skip)]
    pub manifest: Option<PathBuf>,
}

/// Runs a parsed command line, on a dedicated pool when `--threads` is given.
pub fn run(cli: &Cli) -> Result<Outcome, CliError> {
    match cli.threads {
        Some(t) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(t)
                .build()
                .map_err(|e| CliError::Usage(format!("cannot start {t} worker threads: {e}")))?;
            pool.install(|| dispatch(cli))
        }
        None => dispatch(cli),
    }
}

fn dispatch(cli: &Cli) -> Result<Outcome, CliError> {
    match &cli.command {
        Command::Fit(a) => cmd_fit(a),
        Command::Path(a) => cmd_path(a),
        Command::Cv(a) => cmd_cv(a, cli.seed.unwrap_or(0)),
        Command::Simulate(a) => cmd_simulate(a, cli.seed),
        Command::Decompose(a) => cmd_decompose(a),
        Command::Metrics(a) => cmd_metrics(a),
    }
}

fn emit(out: Option<&Path>, text: &str) -> Result<(), CliError> {
    match out {
        Some(p) => write_file(p, text),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn finish_manifest(manifest: Option<&Path>, m: RunManifest) -> Result<(), CliError> {
    match manifest {
        Some(p) => write_file(p, &m.finish().to_json()),
        None => Ok(()),
    }
}

pub fn load_taxonomy(path: &Path) -> Result<Taxonomy, CliError> {
    let table = formats::read_taxonomy_table(&read_text(path)?)?;
    Ok(parse_taxonomy(&table)?)
}

fn load_solver_options(path: Option<&Path>) -> Result<SolverOptions, CliError> {
    let opts = match path {
        Some(p) => toml::from_str(&read_text(p)?).map_err(|e| CliError::Config(format!("{}: {e}", p.display())))?,
        None => SolverOptions::default(),
    };
    let opts: SolverOptions = opts;
    opts.validate()?;
    Ok(opts)
}

struct Loaded {
    data: Dataset,
    taxonomy: Taxonomy,
    options: SolverOptions,
}

fn load_data(a: &DataArgs) -> Result<Loaded, CliError> {
    let (_, x) = formats::read_design(&read_text(&a.design)?)?;
    let y = formats::read_vector(&read_text(&a.response)?, "response")?;
    let taxonomy = load_taxonomy(&a.taxonomy)?;
    if taxonomy.p() != x.ncols() {
        return Err(Error::DimensionMismatch(format!(
            "design has {} covariates, taxonomy has {}",
            x.ncols(),
            taxonomy.p()
        ))
        .into());
    }
    let mut data = Dataset::new(x, y, a.family.into(), !a.no_intercept)?;
    if a.normalize_rows {
        data = data.normalize_rows();
    }
    Ok(Loaded {
        data,
        taxonomy,
        options: load_solver_options(a.solver_config.as_deref())?,
    })
}

fn data_inputs(a: &DataArgs) -> Vec<&Path> {
    let mut v = vec![a.design.as_path(), a.response.as_path(), a.taxonomy.as_path()];
    if let Some(p) = &a.solver_config {
        v.push(p);
    }
    v
}

/// Maps a fit on standardized columns back to the original scale.
fn unstandardize(mut fit: PhiLassoFit, shifts: &[f64], scales: &[f64], taxonomy: &Taxonomy) -> Result<PhiLassoFit, CliError> {
    for (b, s) in fit.beta.iter_mut().zip(scales) {
        *b /= s;
    }
    fit.intercept -= fit.beta.iter().zip(shifts).map(|(b, m)| b * m).sum::<f64>();
    fit.decomposition = decompose::partial_inverse(&fit.beta, taxonomy, 1.0, EquilibriumOptions::default().tol)?;
    Ok(fit)
}

fn cmd_fit(a: &FitArgs) -> Result<Outcome, CliError> {
    let manifest = RunManifest::start("fit", &data_inputs(&a.data), a, None)?;
    let l = load_data(&a.data)?;
    let fit = if a.standardize {
        let (data, shifts, scales) = l.data.standardized();
        let fit = solver::phi_lasso_fit(&data, &l.taxonomy, a.lambda, &l.options, None)?;
        unstandardize(fit, &shifts, &scales, &l.taxonomy)?
    } else {
        solver::phi_lasso_fit(&l.data, &l.taxonomy, a.lambda, &l.options, None)?
    };
    log_revivals(&fit);
    if !fit.converged {
        log::warn!(
            "fit did not converge after {} reweighting steps (KKT residual {:e})",
            fit.outer_iterations,
            fit.kkt_residual
        );
    }
    emit(a.out.as_deref(), &formats::write_fit(&fit))?;
    finish_manifest(a.manifest.as_deref(), manifest)?;
    Ok(if fit.converged { Outcome::Ok } else { Outcome::NotConverged })
}

/// Reports reweighting steps where coefficients re-entered from a zero lineage
/// product and the objective decreased.
fn log_revivals(fit: &PhiLassoFit) {
    let drops = fit
        .objective_trace
        .windows(2)
        .zip(&fit.revivals)
        .filter(|(w, r)| **r > 0 && w[1] < w[0] - 1e-8 * w[0].abs().max(1.0))
        .count();
    if drops > 0 {
        log::warn!(
            "lambda {}: objective decreased at {drops} reweighting steps after zero-weight coefficients re-entered",
            fit.lambda
        );
    }
}

fn grid_for(data: &Dataset, g: &GridArgs) -> Result<Vec<f64>, CliError> {
    if g.lambdas.is_empty() {
        Ok(tuning::lambda_grid(data, g.n_lambda, g.min_ratio)?)
    } else {
        solver::check_grid(&g.lambdas)?;
        Ok(g.lambdas.clone())
    }
}

fn cmd_path(a: &PathArgs) -> Result<Outcome, CliError> {
    let manifest = RunManifest::start("path", &data_inputs(&a.data), a, None)?;
    let l = load_data(&a.data)?;
    let (data, shifts, scales) = if a.standardize {
        l.data.standardized()
    } else {
        let p = l.data.p();
        (l.data, vec![0.0; p], vec![1.0; p])
    };
    let grid = grid_for(&data, &a.grid)?;
    let mut path = solver::phi_lasso_path(&data, &l.taxonomy, &grid, &l.options)?;
    if a.standardize {
        path = path
            .into_iter()
            .map(|r| r.and_then(|f| unstandardize(f, &shifts, &scales, &l.taxonomy).map_err(core_error)))
            .collect();
    }
    let clean = path.iter().all(|r| r.as_ref().is_ok_and(|f| f.converged));
    for (r, lambda) in path.iter().zip(&grid) {
        match r {
            Err(e) => log::warn!("lambda {lambda}: {e}"),
            Ok(f) => {
                log_revivals(f);
                if !f.converged {
                    log::warn!("lambda {lambda}: not converged");
                }
            }
        }
    }
    emit(a.out.as_deref(), &formats::write_path(&path, &grid))?;
    finish_manifest(a.manifest.as_deref(), manifest)?;
    Ok(if clean { Outcome::Ok } else { Outcome::NotConverged })
}

fn core_error(e: CliError) -> Error {
    match e {
        CliError::Core(e) => e,
        other => Error::InvalidArgument(other.to_string()),
    }
}

fn parse_folds(s: &str) -> Result<Folds, CliError> {
    if s.eq_ignore_ascii_case("loo") {
        return Ok(Folds::LeaveOneOut);
    }
    s.parse::<usize>()
        .map(Folds::KFold)
        .map_err(|_| CliError::Usage(format!("--folds must be 'loo' or a fold count, got '{s}'")))
}

fn cmd_cv(a: &CvArgs, seed: u64) -> Result<Outcome, CliError> {
    let manifest = RunManifest::start("cv", &data_inputs(&a.data), a, Some(seed))?;
    let folds = parse_folds(&a.folds)?;
    let l = load_data(&a.data)?;
    let family = l.data.family();
    let select = if a.select.is_empty() {
        match family {
            Family::Logistic => vec![Criterion::Auc, Criterion::Brier],
            Family::Gaussian => vec![Criterion::Deviance],
        }
    } else {
        a.select.clone()
    };
    if family == Family::Gaussian {
        if select.contains(&Criterion::Auc) {
            return Err(CliError::Usage("AUC requires binary response".into()));
        }
        if select.contains(&Criterion::Brier) {
            return Err(CliError::Usage("Brier score requires binary response".into()));
        }
    }
    let grid = grid_for(&l.data, &a.grid)?;
    let cv = parallel::cross_validate(&l.data, &l.taxonomy, &grid, &l.options, folds, seed)?;
    std::fs::create_dir_all(&a.out_dir).map_err(|source| CliError::Io {
        path: a.out_dir.display().to_string(),
        source,
    })?;
    write_file(&a.out_dir.join("cv.csv"), &formats::write_cv_csv(&cv))?;
    let mut outcome = Outcome::Ok;
    for c in select {
        let (name, best) = match c {
            Criterion::Auc => ("auc", cv.best_by_auc),
            Criterion::Brier => ("brier", cv.best_by_brier),
            Criterion::Deviance => ("deviance", cv.best_by_deviance),
        };
        let path = a.out_dir.join(format!("selection_by_{name}.tsv"));
        match best {
            Some(lambda) => {
                log::info!("best lambda by {name}: {lambda}");
                let sel = tuning::selection_summary(&cv, lambda)?;
                write_file(&path, &formats::write_selection_tsv(&sel, &l.taxonomy))?;
            }
            None => {
                log::warn!("no eligible lambda for {name}; writing an empty selection table");
                outcome = Outcome::NotConverged;
                let empty = tuning::SelectionSummary {
                    lambda: f64::NAN,
                    folds: 0,
                    covariates: Vec::new(),
                };
                write_file(&path, &formats::write_selection_tsv(&empty, &l.taxonomy))?;
            }
        }
    }
    let nonconverged: usize = cv.per_lambda.iter().map(|s| s.nonconverged_folds).sum();
    let failed: usize = cv.per_lambda.iter().map(|s| s.failed_folds).sum();
    if nonconverged + failed > 0 {
        log::warn!("{failed} failed and {nonconverged} non-converged fold fits");
    }
    write_file(&a.out_dir.join("manifest.json"), &manifest.finish().to_json())?;
    Ok(outcome)
}

pub fn load_experiment_config(path: &Path) -> Result<ExperimentConfig, CliError> {
    let text = read_text(path)?;
    let cfg: ExperimentConfig = if path.extension().is_some_and(|e| e == "json") {
        serde_json::from_str(&text).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?
    } else {
        toml::from_str(&text).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?
    };
    Ok(cfg)
}

fn cmd_simulate(a: &SimulateArgs, seed: Option<u64>) -> Result<Outcome, CliError> {
    let mut cfg = match &a.config {
        Some(p) => load_experiment_config(p)?,
        None if a.extended => ExperimentConfig::extended(),
        None => ExperimentConfig::desk(),
    };
    if let Some(s) = seed {
        cfg.sim.seed = s;
    }
    cfg.validate()?;
    let inputs: Vec<&Path> = a.config.iter().map(PathBuf::as_path).collect();
    let manifest = RunManifest::start("simulate", &inputs, &cfg, Some(cfg.sim.seed))?;
    let res = parallel::run_experiment(&cfg)?;
    for (method, n, failed) in &res.failures {
        log::warn!("{method} failed on {failed} replicates at n = {n}");
    }
    std::fs::create_dir_all(&a.out_dir).map_err(|source| CliError::Io {
        path: a.out_dir.display().to_string(),
        source,
    })?;
    let resolved = serde_json::to_string_pretty(&cfg).map_err(|e| CliError::Config(e.to_string()))?;
    write_file(&a.out_dir.join("config.json"), &(resolved + "\n"))?;
    write_file(&a.out_dir.join("experiment.csv"), &formats::write_experiment_csv(&res))?;
    write_file(&a.out_dir.join("replicates.csv"), &formats::write_replicates_csv(&res))?;
    write_file(&a.out_dir.join("lambdas.csv"), &formats::write_lambdas_csv(&res))?;
    write_file(&a.out_dir.join("manifest.json"), &manifest.finish().to_json())?;
    Ok(Outcome::Ok)
}

fn cmd_decompose(a: &DecomposeArgs) -> Result<Outcome, CliError> {
    let manifest = RunManifest::start("decompose", &[a.beta.as_path(), a.taxonomy.as_path()], a, None)?;
    let beta = formats::read_vector(&read_text(&a.beta)?, "beta")?;
    let taxonomy = load_taxonomy(&a.taxonomy)?;
    let opts = EquilibriumOptions {
        tol: a.tol,
        max_sweeps: a.max_sweeps,
    };
    match decompose::partial_inverse_with(&beta, &taxonomy, a.q, &opts) {
        Ok(eq) => {
            emit(a.out.as_deref(), &formats::write_decomposition(&eq, &beta, &taxonomy)?)?;
            finish_manifest(a.manifest.as_deref(), manifest)?;
            Ok(Outcome::Ok)
        }
        Err(Error::NonConvergence { iterations, residual, .. }) => {
            log::error!("mass equilibrium did not converge after {iterations} sweeps; residual {residual:e}");
            finish_manifest(a.manifest.as_deref(), manifest)?;
            Ok(Outcome::NotConverged)
        }
        Err(e) => Err(e.into()),
    }
}

#[derive(Serialize, Default)]
#[serde(rename_all = "camelCase")]
struct MetricsReport {
    #[serde(skip_serializing_if = "Option::is_none")]
    n: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    auc: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    brier: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    deviance: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    recall: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    precision: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    sse: Option<f64>,
}

fn cmd_metrics(a: &MetricsArgs) -> Result<Outcome, CliError> {
    let mut inputs: Vec<&Path> = Vec::new();
    for p in [&a.predictions, &a.labels, &a.estimate, &a.truth].into_iter().flatten() {
        inputs.push(p);
    }
    if inputs.is_empty() {
        return Err(CliError::Usage(
            "give --predictions/--labels and/or --estimate/--truth".into(),
        ));
    }
    let manifest = RunManifest::start("metrics", &inputs, a, None)?;
    let mut report = MetricsReport::default();
    if let (Some(p), Some(l)) = (&a.predictions, &a.labels) {
        let pred = formats::read_vector(&read_text(p)?, "predictions")?;
        let labels = formats::read_vector(&read_text(l)?, "labels")?;
        report.n = Some(labels.len());
        report.auc = Some(tuning::auc(&pred, &labels)?);
        report.brier = Some(tuning::brier(&pred, &labels)?);
        report.deviance = Some(tuning::mean_deviance(Family::Logistic, &pred, &labels)?);
    }
    if let (Some(e), Some(t)) = (&a.estimate, &a.truth) {
        let est = formats::read_vector(&read_text(e)?, "estimate")?;
        let truth = formats::read_vector(&read_text(t)?, "truth")?;
        let (recall, precision) = tuning::support_metrics(&est, &truth)?;
        report.recall = Some(recall);
        report.precision = Some(precision);
        report.sse = Some(est.iter().zip(&truth).map(|(a, b)| (a - b) * (a - b)).sum());
    }
    let mut text = serde_json::to_string_pretty(&report).map_err(|e| CliError::Config(e.to_string()))?;
    text.push('\n');
    emit(a.out.as_deref(), &text)?;
    finish_manifest(a.manifest.as_deref(), manifest)?;
    Ok(Outcome::Ok)
}
