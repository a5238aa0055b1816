use philasso::parallel;
use philasso_core::glm::{Dataset, Family};
use philasso_core::rng::{derived_rng, purpose};
use philasso_core::sim::{self, gen_dataset, true_beta, ExperimentConfig, SimConfig};
use philasso_core::solver::SolverOptions;
use philasso_core::tuning::{self, Folds};

fn small_config() -> ExperimentConfig {
    ExperimentConfig {
        sim: SimConfig {
            branching: 2,
            depth: 4,
            level_std_devs: vec![2.0, 3.0, 4.0],
            normalizer: 54f64.sqrt(),
            true_coef_count: 4,
            validation_size: 100,
            ..SimConfig::desk()
        },
        n_list: vec![25, 40],
        replicates: 4,
        tuning_replicates: 3,
        n_lambda: 6,
        ..ExperimentConfig::desk()
    }
}

#[test]
fn parallel_experiment_equals_serial() {
    let cfg = small_config();
    assert_eq!(parallel::run_experiment(&cfg).unwrap(), sim::run_experiment(&cfg).unwrap());
}

#[test]
fn parallel_cv_equals_serial() {
    let cfg = small_config().sim;
    let tax = cfg.generator_taxonomy().unwrap();
    let beta = true_beta(&cfg).unwrap();
    let mut rng = derived_rng(1, purpose::DATASET, 0, 0);
    let d = gen_dataset(&cfg, &tax, &beta, 24, &mut rng).unwrap();
    let data = Dataset::new(d.x().clone(), d.y().to_vec(), Family::Gaussian, true).unwrap();
    let fit_tax = cfg.fit_taxonomy().unwrap();
    let grid = tuning::lambda_grid(&data, 5, 0.1).unwrap();
    let opts = SolverOptions::default();
    for folds in [Folds::LeaveOneOut, Folds::KFold(5)] {
        let a = parallel::cross_validate(&data, &fit_tax, &grid, &opts, folds, 9).unwrap();
        let b = tuning::cross_validate(&data, &fit_tax, &grid, &opts, folds, 9).unwrap();
        assert_eq!(a, b);
    }
}
