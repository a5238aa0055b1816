//! Simulation study: balanced taxonomies, designs with taxon-wise shared
//! effects, sparse block truths, an oracle least-squares baseline and the
//! replicate experiment runner.
//!
//! A design row is `x = (z + sum_l w_l) / normalizer` where `z ~ N(0, s_Z^2 I)`
//! and, for every sub-root grouping level `l`, `w_l` adds one `N(0, s_l^2)` draw
//! per taxon to all covariates of that taxon. With `normalizer^2 = s_Z^2 +
//! sum_l s_l^2` every column has unit variance.

use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::glm::{Dataset, Family};
use crate::matrix::{cholesky_solve, Matrix};
use crate::num::sqrt;
use crate::rng::{derived_rng, purpose};
use crate::solver::{self, FitResult, SolverOptions};
use crate::taxonomy::{balanced_taxonomy, Taxonomy};
use crate::tuning::{self, PerformanceRecord};
use crate::{Error, Result};

/// Placement of the nonzero coefficients.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TruthLayout {
    /// Eight deepest-level sibling blocks in the shape of the pruned
    /// reference tree: six under the first class (three genera in two
    /// families) and two under the second. Needs `depth >= 6` and
    /// `trueCoefCount = 8 * branching`.
    Pruned,
    /// Blocks split 3:1 between the first two classes; within a class,
    /// consecutive blocks go to different subtrees at every level.
    Spread,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, rename_all = "camelCase", deny_unknown_fields)]
pub struct SimConfig {
    pub branching: usize,
    /// Number of grouping levels (the root level included); `p = branching^depth`.
    pub depth: usize,
    /// Shared-effect standard deviations of grouping levels `1..depth`.
    pub level_std_devs: Vec<f64>,
    pub base_std_dev: f64,
    pub normalizer: f64,
    pub true_coef_count: usize,
    pub true_coef_value: f64,
    pub noise_sigma: f64,
    /// Training sample size used by [`gen_replicate`].
    pub n: usize,
    pub seed: u64,
    pub truth_layout: TruthLayout,
    pub validation_size: usize,
}

impl Default for SimConfig {
    fn default() -> Self {
        SimConfig::paper()
    }
}

impl SimConfig {
    /// Reference configuration: `p = 4096`, 32 coefficients equal to 2.
    pub fn paper() -> Self {
        SimConfig {
            branching: 4,
            depth: 6,
            level_std_devs: vec![0.5, 1.0, 2.0, 3.0, 4.0],
            base_std_dev: 5.0,
            normalizer: sqrt(55.25),
            true_coef_count: 32,
            true_coef_value: 2.0,
            noise_sigma: 1.0,
            n: 250,
            seed: 1,
            truth_layout: TruthLayout::Pruned,
            validation_size: 10_000,
        }
    }

    /// Desk-scale configuration: `p = 256`, 8 coefficients equal to 2. The
    /// three sub-root levels keep the three deepest shared-effect scales.
    pub fn desk() -> Self {
        SimConfig {
            depth: 4,
            level_std_devs: vec![2.0, 3.0, 4.0],
            normalizer: sqrt(54.0),
            true_coef_count: 8,
            n: 200,
            truth_layout: TruthLayout::Spread,
            ..SimConfig::paper()
        }
    }

    pub fn p(&self) -> usize {
        self.branching.pow(self.depth as u32)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidConfig(m));
        if self.branching < 2 || self.depth < 2 {
            return bad("branching must be >= 2 and depth >= 2".into());
        }
        let too_big = u32::try_from(self.depth)
            .ok()
            .and_then(|d| self.branching.checked_pow(d))
            .is_none_or(|p| p > 1 << 24);
        if too_big {
            return bad("branching^depth is too large".into());
        }
        let sds_ok = self.level_std_devs.iter().all(|s| *s >= 0.0 && s.is_finite());
        if !(self.base_std_dev >= 0.0 && self.base_std_dev.is_finite()) || !sds_ok {
            return bad("standard deviations must be finite and nonnegative".into());
        }
        let identity = "normalizer identity normalizer^2 = baseStdDev^2 + sum levelStdDevs^2";
        if self.level_std_devs.len() != self.depth - 1 {
            return bad(alloc::format!(
                "levelStdDevs has {} entries but depth {} needs {} (one per sub-root level; {identity})",
                self.level_std_devs.len(),
                self.depth,
                self.depth - 1
            ));
        }
        let total = self.base_std_dev * self.base_std_dev
            + self.level_std_devs.iter().map(|s| s * s).sum::<f64>();
        if !(self.normalizer > 0.0) || (self.normalizer * self.normalizer - total).abs() > 1e-9 * total.max(1.0) {
            return bad(alloc::format!(
                "{identity} violated: normalizer^2 = {} but the variances sum to {total}",
                self.normalizer * self.normalizer
            ));
        }
        if self.true_coef_count > self.p() {
            return bad("trueCoefCount exceeds p".into());
        }
        if !self.true_coef_count.is_multiple_of(self.branching) {
            return bad("trueCoefCount must be a multiple of branching".into());
        }
        if !self.true_coef_value.is_finite() || !(self.noise_sigma >= 0.0 && self.noise_sigma.is_finite()) {
            return bad("trueCoefValue and noiseSigma must be finite (noiseSigma >= 0)".into());
        }
        Ok(())
    }

    /// Taxonomy the data are generated from.
    pub fn generator_taxonomy(&self) -> Result<Taxonomy> {
        balanced_taxonomy(self.branching, self.depth)
    }

    /// Taxonomy handed to the fitter: the deepest grouping level is dropped.
    pub fn fit_taxonomy(&self) -> Result<Taxonomy> {
        self.generator_taxonomy()?.without_grouping_level(self.depth - 1)
    }
}

/// Population covariance of covariates `j` and `k` under the generator.
pub fn population_covariance(config: &SimConfig, taxonomy: &Taxonomy, j: usize, k: usize) -> f64 {
    let mut s = if j == k { config.base_std_dev * config.base_std_dev } else { 0.0 };
    for (l, sd) in config.level_std_devs.iter().enumerate() {
        if taxonomy.taxon_of(l + 1, j) == taxonomy.taxon_of(l + 1, k) {
            s += sd * sd;
        }
    }
    s / (config.normalizer * config.normalizer)
}

/// Draws an `n x p` design. Per sample the shared level effects are drawn
/// first (level by level, taxa in order), then the `p` base coordinates.
pub fn gen_design<R: Rng + ?Sized>(config: &SimConfig, taxonomy: &Taxonomy, n: usize, rng: &mut R) -> Result<Matrix> {
    let levels = config.level_std_devs.len();
    if taxonomy.depth() != levels + 1 {
        return Err(Error::InvalidConfig(alloc::format!(
            "{levels} level standard deviations for a taxonomy with {} grouping levels",
            taxonomy.depth()
        )));
    }
    let p = taxonomy.p();
    let mut x = Matrix::zeros(n, p);
    let mut shared: Vec<Vec<f64>> = (0..levels)
        .map(|l| vec![0.0; taxonomy.levels()[l + 1].taxa.len()])
        .collect();
    let inv = 1.0 / config.normalizer;
    let mut row = vec![0.0; p];
    for i in 0..n {
        for (l, effects) in shared.iter_mut().enumerate() {
            let sd = config.level_std_devs[l];
            for e in effects.iter_mut() {
                let z: f64 = rng.sample(StandardNormal);
                *e = sd * z;
            }
        }
        for v in row.iter_mut() {
            let z: f64 = rng.sample(StandardNormal);
            *v = config.base_std_dev * z;
        }
        for (l, effects) in shared.iter().enumerate() {
            for (v, &t) in row.iter_mut().zip(taxonomy.level_membership(l + 1)) {
                *v += effects[t];
            }
        }
        for (j, v) in row.iter().enumerate() {
            x.set(i, j, v * inv);
        }
    }
    Ok(x)
}

/// Deepest-level block paths below a class, as child positions per level.
const PRUNED_CLASS0: [[usize; 4]; 6] = [
    [0, 0, 0, 0],
    [0, 0, 0, 1],
    [0, 0, 0, 2],
    [0, 0, 1, 0],
    [0, 1, 0, 0],
    [0, 1, 0, 1],
];
const PRUNED_CLASS1: [[usize; 4]; 2] = [[0, 0, 0, 0], [0, 0, 0, 1]];

/// Index of the deepest-level block reached from `class` by child positions
/// `path` (one per level below the class).
fn block_index(config: &SimConfig, class: usize, path: &[usize]) -> usize {
    path.iter().fold(class, |acc, &c| acc * config.branching + c)
}

/// True coefficient vector (nonzero blocks are whole deepest-level taxa).
pub fn true_beta(config: &SimConfig) -> Result<Vec<f64>> {
    config.validate()?;
    let p = config.p();
    let b = config.branching;
    let blocks = config.true_coef_count / b;
    let mut beta = vec![0.0; p];
    if blocks == 0 {
        return Ok(beta);
    }
    // deepest grouping level sits `depth - 2` levels below the classes
    let below = config.depth - 2;
    let chosen: Vec<usize> = match config.truth_layout {
        TruthLayout::Pruned => {
            if config.depth < 6 || blocks != 8 {
                return Err(Error::InvalidConfig(
                    "pruned layout needs depth >= 6 and trueCoefCount = 8 * branching".into(),
                ));
            }
            let pad = |path: &[usize; 4]| {
                let mut v = path.to_vec();
                v.resize(below, 0);
                v
            };
            PRUNED_CLASS0
                .iter()
                .map(|p| block_index(config, 0, &pad(p)))
                .chain(PRUNED_CLASS1.iter().map(|p| block_index(config, 1, &pad(p))))
                .collect()
        }
        TruthLayout::Spread => {
            let minor = if blocks >= 2 { (blocks / 4).max(1) } else { 0 };
            let major = blocks - minor;
            let per_class = b.pow(below as u32);
            if major > per_class || minor > per_class {
                return Err(Error::InvalidConfig("too many true blocks for the spread layout".into()));
            }
            let spread = |class: usize, count: usize| {
                (0..count).map(move |i| {
                    let mut path = vec![0; below];
                    let mut r = i;
                    for slot in path.iter_mut() {
                        *slot = r % b;
                        r /= b;
                    }
                    block_index(config, class, &path)
                })
            };
            spread(0, major).chain(spread(1, minor)).collect()
        }
    };
    for blk in chosen {
        for j in blk * b..(blk + 1) * b {
            beta[j] = config.true_coef_value;
        }
    }
    Ok(beta)
}

/// Gaussian responses `y = X beta + noise` for a fresh design.
pub fn gen_dataset<R: Rng + ?Sized>(
    config: &SimConfig,
    taxonomy: &Taxonomy,
    beta: &[f64],
    n: usize,
    rng: &mut R,
) -> Result<Dataset> {
    let x = gen_design(config, taxonomy, n, rng)?;
    let mut y = x.mul_vec(beta);
    for v in &mut y {
        let e: f64 = rng.sample(StandardNormal);
        *v += config.noise_sigma * e;
    }
    Dataset::new(x, y, Family::Gaussian, false)
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimReplicate {
    pub train: Dataset,
    pub validation: Dataset,
    pub true_beta: Vec<f64>,
    /// Taxonomy for fitting (deepest grouping level removed).
    pub taxonomy: Taxonomy,
}

/// Replicate `index` of size `config.n` with a validation set of
/// `config.validation_size`; streams derive from `config.seed` and `index`.
pub fn gen_replicate(config: &SimConfig, index: u64) -> Result<SimReplicate> {
    config.validate()?;
    let gen_tax = config.generator_taxonomy()?;
    let beta = true_beta(config)?;
    let mut rng = derived_rng(config.seed, purpose::TRAIN, config.n as u64, index);
    let train = gen_dataset(config, &gen_tax, &beta, config.n, &mut rng)?;
    let mut rng = derived_rng(config.seed, purpose::PERFORMANCE_VALIDATION, config.n as u64, index);
    let validation = gen_dataset(config, &gen_tax, &beta, config.validation_size, &mut rng)?;
    Ok(SimReplicate {
        train,
        validation,
        true_beta: beta,
        taxonomy: config.fit_taxonomy()?,
    })
}

/// Least squares restricted to the nonzero pattern of `true_beta` (no
/// intercept); zeros elsewhere.
pub fn oracle_ols(train: &Dataset, true_beta: &[f64]) -> Result<FitResult> {
    if true_beta.len() != train.p() {
        return Err(Error::dims("true beta length differs from column count"));
    }
    let support: Vec<usize> = (0..true_beta.len()).filter(|&j| true_beta[j] != 0.0).collect();
    let k = support.len();
    let mut beta = vec![0.0; train.p()];
    if k > 0 {
        if train.n() <= k {
            return Err(Error::Singular(alloc::format!("{} samples for {k} oracle coefficients", train.n())));
        }
        let x = train.x();
        let mut gram = vec![0.0; k * k];
        let mut rhs = vec![0.0; k];
        for (a, &ja) in support.iter().enumerate() {
            rhs[a] = crate::matrix::dot(x.col(ja), train.y());
            for (b, &jb) in support.iter().enumerate().take(a + 1) {
                let v = crate::matrix::dot(x.col(ja), x.col(jb));
                gram[a * k + b] = v;
                gram[b * k + a] = v;
            }
        }
        let sol = cholesky_solve(&gram, &rhs, k)?;
        for (&j, v) in support.iter().zip(sol) {
            beta[j] = v;
        }
    }
    let objective = crate::glm::log_likelihood(train, &beta, 0.0)?;
    Ok(FitResult {
        beta,
        intercept: 0.0,
        converged: true,
        iterations: 1,
        kkt_residual: 0.0,
        objective,
    })
}

/// Replicate experiment settings around a [`SimConfig`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, rename_all = "camelCase", deny_unknown_fields)]
pub struct ExperimentConfig {
    pub sim: SimConfig,
    pub n_list: Vec<usize>,
    /// Evaluation replicates per sample size.
    pub replicates: usize,
    /// Training sets per sample size used to pick lambda.
    pub tuning_replicates: usize,
    pub n_lambda: usize,
    pub min_ratio: f64,
    pub solver: SolverOptions,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig::desk()
    }
}

impl ExperimentConfig {
    pub fn desk() -> Self {
        ExperimentConfig {
            sim: SimConfig::desk(),
            n_list: vec![50, 100, 200],
            replicates: 20,
            tuning_replicates: 10,
            n_lambda: 30,
            min_ratio: 0.01,
            solver: SolverOptions::default(),
        }
    }

    /// Full-size configuration (`p = 4096`, 100 replicates).
    pub fn extended() -> Self {
        ExperimentConfig {
            sim: SimConfig::paper(),
            n_list: vec![100, 250, 500],
            replicates: 100,
            tuning_replicates: 100,
            ..ExperimentConfig::desk()
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.sim.validate()?;
        self.solver.validate()?;
        if self.n_list.iter().any(|&n| n < 2) {
            return Err(Error::InvalidConfig("sample sizes must be >= 2".into()));
        }
        if self.tuning_replicates == 0 || self.n_lambda == 0 {
            return Err(Error::InvalidConfig("tuningReplicates and nLambda must be positive".into()));
        }
        if !(self.min_ratio > 0.0 && self.min_ratio < 1.0) {
            return Err(Error::InvalidConfig("minRatio must lie in (0, 1)".into()));
        }
        if self.sim.validation_size == 0 {
            return Err(Error::InvalidConfig("validationSize must be positive".into()));
        }
        Ok(())
    }
}

/// Fixed ingredients shared by all replicates of an experiment.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentSetup {
    pub generator_taxonomy: Taxonomy,
    pub fit_taxonomy: Taxonomy,
    pub true_beta: Vec<f64>,
    /// Validation set for choosing lambda.
    pub tuning_validation: Dataset,
    /// Independent validation set for reported prediction errors.
    pub performance_validation: Dataset,
}

pub fn setup(config: &ExperimentConfig) -> Result<ExperimentSetup> {
    config.validate()?;
    let sim = &config.sim;
    let generator_taxonomy = sim.generator_taxonomy()?;
    let beta = true_beta(sim)?;
    let mut rng = derived_rng(sim.seed, purpose::TUNING_VALIDATION, 0, 0);
    let tuning_validation = gen_dataset(sim, &generator_taxonomy, &beta, sim.validation_size, &mut rng)?;
    let mut rng = derived_rng(sim.seed, purpose::PERFORMANCE_VALIDATION, 0, 0);
    let performance_validation = gen_dataset(sim, &generator_taxonomy, &beta, sim.validation_size, &mut rng)?;
    Ok(ExperimentSetup {
        fit_taxonomy: sim.fit_taxonomy()?,
        generator_taxonomy,
        true_beta: beta,
        tuning_validation,
        performance_validation,
    })
}

fn tuning_data(config: &ExperimentConfig, setup: &ExperimentSetup, n: usize, r: usize) -> Result<Dataset> {
    let mut rng = derived_rng(config.sim.seed, purpose::TUNING_TRAIN, n as u64, r as u64);
    gen_dataset(&config.sim, &setup.generator_taxonomy, &setup.true_beta, n, &mut rng)
}

/// `lambda_max` of tuning training set `r` at sample size `n`.
pub fn tuning_lambda_max(config: &ExperimentConfig, setup: &ExperimentSetup, n: usize, r: usize) -> Result<f64> {
    tuning::lambda_max(&tuning_data(config, setup, n, r)?)
}

/// Common grid from the largest per-replicate `lambda_max`.
pub fn tuning_grid(config: &ExperimentConfig, lambda_maxes: &[f64]) -> Result<Vec<f64>> {
    let top = lambda_maxes.iter().copied().fold(0.0, f64::max);
    tuning::geometric_grid(top, config.n_lambda, config.min_ratio)
}

/// Tuning-validation MSPE along `grid` for tuning training set `r`.
pub fn tuning_replicate(
    config: &ExperimentConfig,
    setup: &ExperimentSetup,
    n: usize,
    r: usize,
    grid: &[f64],
) -> Result<Vec<Option<f64>>> {
    let data = tuning_data(config, setup, n, r)?;
    let res = tuning::validation_tune(&data, &setup.tuning_validation, &setup.fit_taxonomy, grid, &config.solver)?;
    Ok(res.mspe)
}

/// Lambda minimizing the mean tuning MSPE (ties toward larger lambda).
/// Grid points where any tuning replicate failed are skipped.
pub fn select_lambda(grid: &[f64], per_replicate: &[Vec<Option<f64>>]) -> Result<f64> {
    let means: Vec<Option<f64>> = (0..grid.len())
        .map(|l| {
            let vals: Option<Vec<f64>> = per_replicate.iter().map(|m| m.get(l).copied().flatten()).collect();
            vals.filter(|v| !v.is_empty())
                .map(|v| v.iter().sum::<f64>() / v.len() as f64)
        })
        .collect();
    tuning::argmin_first(&means)
        .map(|i| grid[i])
        .ok_or_else(|| Error::InvalidConfig("no lambda could be evaluated during tuning".into()))
}

/// Outcome of one evaluation replicate.
#[derive(Debug, Clone, PartialEq)]
pub struct ReplicateOutcome {
    pub n: usize,
    pub replicate: usize,
    pub philasso: core::result::Result<PerformanceRecord, Error>,
    pub philasso_converged: bool,
    pub oracle: core::result::Result<PerformanceRecord, Error>,
}

/// Fits evaluation replicate `r` at `lambda` and scores both methods on the
/// performance validation set.
pub fn evaluate_replicate(
    config: &ExperimentConfig,
    setup: &ExperimentSetup,
    n: usize,
    r: usize,
    lambda: f64,
) -> ReplicateOutcome {
    let mut rng = derived_rng(config.sim.seed, purpose::TRAIN, n as u64, r as u64);
    let data = gen_dataset(&config.sim, &setup.generator_taxonomy, &setup.true_beta, n, &mut rng);
    let valid = &setup.performance_validation;
    let truth = &setup.true_beta;
    let (philasso, philasso_converged, oracle) = match data {
        Ok(data) => {
            let fit = solver::phi_lasso_fit(&data, &setup.fit_taxonomy, lambda, &config.solver, None);
            let converged = fit.as_ref().is_ok_and(|f| f.converged);
            let phi = fit.and_then(|f| tuning::estimation_errors(&f.beta, f.intercept, truth, valid));
            let ols = oracle_ols(&data, truth).and_then(|f| tuning::estimation_errors(&f.beta, 0.0, truth, valid));
            (phi, converged, ols)
        }
        Err(e) => (Err(e.clone()), false, Err(e)),
    };
    ReplicateOutcome {
        n,
        replicate: r,
        philasso,
        philasso_converged,
        oracle,
    }
}

pub const METHODS: [&str; 2] = ["philasso", "oracle"];
pub const METRICS: [&str; 4] = ["sse", "mspe", "recall", "precision"];

fn metric(rec: &PerformanceRecord, name: &str) -> f64 {
    match name {
        "sse" => rec.sse,
        "mspe" => rec.mspe,
        "recall" => rec.recall,
        _ => rec.precision,
    }
}

/// One cell of the summary table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummaryRow {
    pub method: String,
    pub n: usize,
    pub metric: String,
    pub mean: f64,
    /// Standard error of the mean over successful replicates.
    pub se: f64,
    pub median: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentResult {
    /// Selected lambda per sample size, in `n_list` order.
    pub lambdas: Vec<(usize, f64)>,
    pub rows: Vec<SummaryRow>,
    pub replicates: Vec<ReplicateOutcome>,
    /// Failed (method, n) fits, excluded from the summaries.
    pub failures: Vec<(String, usize, usize)>,
}

impl ExperimentResult {
    pub fn row(&self, method: &str, n: usize, metric: &str) -> Option<&SummaryRow> {
        self.rows
            .iter()
            .find(|r| r.method == method && r.n == n && r.metric == metric)
    }
}

/// Median of a sample (mean of the two middle values for even sizes).
pub fn median(values: &[f64]) -> f64 {
    if values.is_empty() {
        return f64::NAN;
    }
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let m = v.len() / 2;
    if v.len() % 2 == 1 {
        v[m]
    } else {
        0.5 * (v[m - 1] + v[m])
    }
}

/// Builds the summary table from replicate outcomes (any order).
pub fn summarize(config: &ExperimentConfig, lambdas: Vec<(usize, f64)>, mut outcomes: Vec<ReplicateOutcome>) -> ExperimentResult {
    outcomes.sort_by_key(|o| (config.n_list.iter().position(|&n| n == o.n), o.replicate));
    let mut rows = Vec::new();
    let mut failures = Vec::new();
    for &n in &config.n_list {
        let here: Vec<&ReplicateOutcome> = outcomes.iter().filter(|o| o.n == n).collect();
        if here.is_empty() {
            continue;
        }
        for method in METHODS {
            let recs: Vec<&PerformanceRecord> = here
                .iter()
                .filter_map(|o| if method == "philasso" { o.philasso.as_ref().ok() } else { o.oracle.as_ref().ok() })
                .collect();
            let failed = here.len() - recs.len();
            if failed > 0 {
                failures.push((String::from(method), n, failed));
            }
            for name in METRICS {
                let vals: Vec<f64> = recs.iter().map(|r| metric(r, name)).collect();
                let k = vals.len() as f64;
                let mean = vals.iter().sum::<f64>() / k;
                let se = if vals.len() > 1 {
                    let var = vals.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (k - 1.0);
                    sqrt(var / k)
                } else {
                    0.0
                };
                rows.push(SummaryRow {
                    method: method.into(),
                    n,
                    metric: name.into(),
                    mean,
                    se,
                    median: median(&vals),
                });
            }
        }
    }
    ExperimentResult {
        lambdas,
        rows,
        replicates: outcomes,
        failures,
    }
}

/// Runs the whole experiment serially: per sample size, pick lambda on the
/// tuning sets, then evaluate fresh replicates.
pub fn run_experiment(config: &ExperimentConfig) -> Result<ExperimentResult> {
    let setup = setup(config)?;
    let mut lambdas = Vec::new();
    let mut outcomes = Vec::new();
    if config.replicates == 0 {
        return Ok(summarize(config, lambdas, outcomes));
    }
    for &n in &config.n_list {
        let lmax = (0..config.tuning_replicates)
            .map(|r| tuning_lambda_max(config, &setup, n, r))
            .collect::<Result<Vec<_>>>()?;
        let grid = tuning_grid(config, &lmax)?;
        let per_rep = (0..config.tuning_replicates)
            .map(|r| tuning_replicate(config, &setup, n, r, &grid))
            .collect::<Result<Vec<_>>>()?;
        let lambda = select_lambda(&grid, &per_rep)?;
        lambdas.push((n, lambda));
        for r in 0..config.replicates {
            outcomes.push(evaluate_replicate(config, &setup, n, r, lambda));
        }
    }
    Ok(summarize(config, lambdas, outcomes))
}
