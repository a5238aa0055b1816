#![allow(dead_code)]

use philasso_core::glm::{Dataset, Family};
use philasso_core::taxonomy::Taxonomy;
use philasso_core::Matrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Random nested taxonomy with `depth` grouping levels over `p` covariates.
/// Each level refines the one above it by splitting taxa at random.
pub fn random_taxonomy(p: usize, depth: usize, rng: &mut impl Rng) -> Taxonomy {
    let mut labels: Vec<Vec<usize>> = Vec::with_capacity(depth);
    let top = rng.random_range(1..=p.min(4));
    labels.push((0..p).map(|_| rng.random_range(0..top)).collect());
    for t in 1..depth {
        let split = rng.random_range(1..=3);
        let prev = &labels[t - 1];
        labels.push(prev.iter().map(|&g| g * 3 + rng.random_range(0..split)).collect());
    }
    let grouping = labels
        .iter()
        .map(|lab| {
            let mut ids: Vec<usize> = lab.clone();
            ids.sort_unstable();
            ids.dedup();
            ids.iter()
                .map(|&g| (0..p).filter(|&j| lab[j] == g).collect())
                .collect()
        })
        .collect();
    Taxonomy::from_grouping_levels(p, grouping).unwrap()
}

/// Coefficients with roughly `density` nonzeros, some of them negative.
pub fn random_beta(p: usize, density: f64, rng: &mut impl Rng) -> Vec<f64> {
    (0..p)
        .map(|_| {
            if rng.random_bool(density) {
                let v: f64 = StandardNormal.sample(rng);
                v * 2.0
            } else {
                0.0
            }
        })
        .collect()
}

pub fn random_design(n: usize, p: usize, rng: &mut impl Rng) -> Matrix {
    let v: Vec<f64> = (0..n * p).map(|_| StandardNormal.sample(rng)).collect();
    Matrix::from_col_major(n, p, v).unwrap()
}

/// Data from a sparse linear model; logistic responses are Bernoulli draws.
pub fn random_dataset(n: usize, p: usize, family: Family, intercept: bool, rng: &mut impl Rng) -> (Dataset, Vec<f64>) {
    let x = random_design(n, p, rng);
    let beta = random_beta(p, 0.3, rng);
    let b0 = if intercept { 0.3 } else { 0.0 };
    let eta: Vec<f64> = x.mul_vec(&beta).into_iter().map(|e| e + b0).collect();
    let y = match family {
        Family::Gaussian => eta
            .iter()
            .map(|e| {
                let z: f64 = StandardNormal.sample(rng);
                e + z
            })
            .collect(),
        Family::Logistic => {
            let mut y: Vec<f64> = eta
                .iter()
                .map(|e| f64::from(u8::from(rng.random_bool(1.0 / (1.0 + (-e / 2.0).exp())))))
                .collect();
            y[0] = 0.0;
            y[1] = 1.0;
            y
        }
    };
    (Dataset::new(x, y, family, intercept).unwrap(), beta)
}

/// Independent gradient of the log-likelihood scaled by `1/n`.
pub fn scaled_gradient(data: &Dataset, beta: &[f64], b0: f64) -> Vec<f64> {
    let x = data.x();
    let n = data.n();
    let resid: Vec<f64> = (0..n)
        .map(|i| {
            let eta: f64 = b0 + (0..data.p()).map(|j| x.get(i, j) * beta[j]).sum::<f64>();
            let mu = match data.family() {
                Family::Gaussian => eta,
                Family::Logistic => 1.0 / (1.0 + (-eta).exp()),
            };
            data.y()[i] - mu
        })
        .collect();
    (0..data.p())
        .map(|j| (0..n).map(|i| x.get(i, j) * resid[i]).sum::<f64>() / n as f64)
        .collect()
}

/// Worst subgradient violation for `l - n lambda sum f |beta|`.
pub fn kkt_violation(data: &Dataset, beta: &[f64], b0: f64, lambda: f64, factors: &[f64]) -> f64 {
    let g = scaled_gradient(data, beta, b0);
    let mut worst = 0.0f64;
    for j in 0..beta.len() {
        let thr = lambda * factors[j];
        let v = if beta[j] == 0.0 {
            (g[j].abs() - thr).max(0.0)
        } else {
            (g[j] - thr * beta[j].signum()).abs()
        };
        worst = worst.max(v);
    }
    worst
}
