//! Rayon versions of the cross-validation and experiment drivers.
//!
//! Each unit of work (a fold, a tuning set, a replicate) is a deterministic
//! function of its index, and results are collected in index order, so these
//! return exactly what the serial drivers in `philasso-core` return.

use philasso_core::glm::Dataset;
use philasso_core::sim::{self, ExperimentConfig, ExperimentResult};
use philasso_core::solver::{self, SolverOptions};
use philasso_core::taxonomy::Taxonomy;
use philasso_core::tuning::{self, CvResult, Folds};
use philasso_core::Result;
use rayon::prelude::*;

pub fn cross_validate(
    data: &Dataset,
    taxonomy: &Taxonomy,
    grid: &[f64],
    options: &SolverOptions,
    folds: Folds,
    seed: u64,
) -> Result<CvResult> {
    solver::check_grid(grid)?;
    let assignment = tuning::fold_assignment(data, folds, seed)?;
    let results = assignment
        .par_iter()
        .map(|held| tuning::cv_fold(data, taxonomy, grid, options, held))
        .collect::<Result<Vec<_>>>()?;
    tuning::assemble_cv(data, grid, results)
}

pub fn run_experiment(config: &ExperimentConfig) -> Result<ExperimentResult> {
    let setup = sim::setup(config)?;
    let mut lambdas = Vec::new();
    let mut outcomes = Vec::new();
    if config.replicates == 0 {
        return Ok(sim::summarize(config, lambdas, outcomes));
    }
    for &n in &config.n_list {
        let lmax = (0..config.tuning_replicates)
            .into_par_iter()
            .map(|r| sim::tuning_lambda_max(config, &setup, n, r))
            .collect::<Result<Vec<_>>>()?;
        let grid = sim::tuning_grid(config, &lmax)?;
        let per_rep = (0..config.tuning_replicates)
            .into_par_iter()
            .map(|r| sim::tuning_replicate(config, &setup, n, r, &grid))
            .collect::<Result<Vec<_>>>()?;
        let lambda = sim::select_lambda(&grid, &per_rep)?;
        log::info!("n = {n}: selected lambda {lambda}");
        lambdas.push((n, lambda));
        let evaluated: Vec<_> = (0..config.replicates)
            .into_par_iter()
            .map(|r| sim::evaluate_replicate(config, &setup, n, r, lambda))
            .collect();
        outcomes.extend(evaluated);
    }
    Ok(sim::summarize(config, lambdas, outcomes))
}
