//! Weighted LASSO by cyclic coordinate descent (with an IRLS wrapper for the
//! logistic family) and the adaptive reweighting loop that fits the
//! taxonomy-structured estimator.
//!
//! All penalties use the `n * lambda` scaling: the weighted LASSO maximizes
//! `l(beta) - n * lambda * sum_j f_j |beta_j|`, and the structured estimator
//! maximizes `l(beta) - n * lambda * (sum d + ||alpha||_1)` over
//! decompositions of `beta`.

use alloc::vec;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::decompose::{self, Decomposition, EquilibriumOptions};
use crate::glm::{self, Dataset, Family};
use crate::matrix::Matrix;
use crate::taxonomy::Taxonomy;
use crate::{Error, Result};

/// `sign(z) * max(|z| - gamma, 0)`.
#[inline]
pub fn soft_threshold(z: f64, gamma: f64) -> f64 {
    if z > gamma {
        z - gamma
    } else if z < -gamma {
        z + gamma
    } else {
        0.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, rename_all = "camelCase", deny_unknown_fields)]
pub struct SolverOptions {
    /// Largest coefficient change accepted as a converged sweep.
    pub inner_tol: f64,
    /// Largest coefficient change between reweighting steps accepted as
    /// convergence of the outer loop.
    pub outer_tol: f64,
    pub max_inner_sweeps: usize,
    pub max_irls: usize,
    pub max_outer: usize,
    pub kkt_tol: f64,
}

impl Default for SolverOptions {
    fn default() -> Self {
        SolverOptions {
            inner_tol: 1e-8,
            outer_tol: 1e-6,
            max_inner_sweeps: 10_000,
            max_irls: 100,
            max_outer: 50,
            kkt_tol: 1e-6,
        }
    }
}

impl SolverOptions {
    pub fn validate(&self) -> Result<()> {
        let tols = [self.inner_tol, self.outer_tol, self.kkt_tol];
        if tols.iter().any(|t| !(*t > 0.0 && t.is_finite())) {
            return Err(Error::arg("solver tolerances must be positive"));
        }
        if self.max_inner_sweeps == 0 || self.max_irls == 0 || self.max_outer == 0 {
            return Err(Error::arg("solver iteration caps must be positive"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct WeightedLassoProblem<'a> {
    pub data: &'a Dataset,
    pub lambda: f64,
    /// Per-coefficient penalty multipliers (`1 / w_j`).
    pub penalty_factors: Vec<f64>,
    pub options: SolverOptions,
}

impl<'a> WeightedLassoProblem<'a> {
    pub fn new(data: &'a Dataset, lambda: f64, penalty_factors: Vec<f64>, options: SolverOptions) -> Result<Self> {
        let problem = WeightedLassoProblem {
            data,
            lambda,
            penalty_factors,
            options,
        };
        problem.validate()?;
        Ok(problem)
    }

    /// Plain LASSO: unit penalty factors.
    pub fn lasso(data: &'a Dataset, lambda: f64, options: SolverOptions) -> Result<Self> {
        Self::new(data, lambda, vec![1.0; data.p()], options)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.lambda > 0.0 && self.lambda.is_finite()) {
            return Err(Error::arg("lambda must be positive and finite"));
        }
        if self.penalty_factors.len() != self.data.p() {
            return Err(Error::dims("penalty factor count differs from column count"));
        }
        if self.penalty_factors.iter().any(|f| !(*f > 0.0 && f.is_finite())) {
            return Err(Error::arg("penalty factors must be positive and finite"));
        }
        self.options.validate()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FitResult {
    pub beta: Vec<f64>,
    pub intercept: f64,
    pub converged: bool,
    /// Coordinate-descent sweeps (Gaussian) or IRLS steps (logistic).
    pub iterations: usize,
    pub kkt_residual: f64,
    /// Penalized log-likelihood `l - n * lambda * sum f_j |beta_j|`.
    pub objective: f64,
}

/// Penalized log-likelihood of the weighted LASSO.
pub fn lasso_objective(data: &Dataset, beta: &[f64], intercept: f64, lambda: f64, factors: &[f64]) -> Result<f64> {
    if factors.len() != beta.len() {
        return Err(Error::dims("penalty factor count differs from beta length"));
    }
    let ll = glm::log_likelihood(data, beta, intercept)?;
    let pen: f64 = beta
        .iter()
        .zip(factors)
        .filter(|(b, _)| **b != 0.0)
        .map(|(b, f)| f * b.abs())
        .sum();
    Ok(ll - data.n() as f64 * lambda * pen)
}

/// Largest violation of the weighted-LASSO subgradient conditions, on the
/// `grad l / n` scale. The intercept (when present) must have zero gradient.
pub fn kkt_residual(data: &Dataset, beta: &[f64], intercept: f64, lambda: f64, factors: &[f64]) -> Result<f64> {
    if factors.len() != beta.len() {
        return Err(Error::dims("penalty factor count differs from beta length"));
    }
    let n = data.n() as f64;
    let g = glm::gradient(data, beta, intercept)?;
    let mut worst = 0.0f64;
    for ((&b, &f), &gj) in beta.iter().zip(factors).zip(&g) {
        let gj = gj / n;
        let thr = lambda * f;
        let v = if b == 0.0 {
            (gj.abs() - thr).max(0.0)
        } else {
            (gj - thr * b.signum()).abs()
        };
        worst = worst.max(v);
    }
    if data.intercept() {
        worst = worst.max((g[beta.len()] / n).abs());
    }
    Ok(worst)
}

/// Coordinate descent on `1/2 sum_i w_i (z_i - b0 - x_i beta)^2 + sum_j thr_j |beta_j|`.
struct Cd<'a> {
    x: &'a Matrix,
    w: Option<&'a [f64]>,
    xw2: Vec<f64>,
    wsum: f64,
    thresholds: &'a [f64],
    intercept: bool,
}

impl<'a> Cd<'a> {
    fn new(x: &'a Matrix, w: Option<&'a [f64]>, thresholds: &'a [f64], intercept: bool) -> Self {
        let xw2 = (0..x.ncols())
            .map(|j| {
                let c = x.col(j);
                match w {
                    Some(w) => c.iter().zip(w).map(|(v, w)| w * v * v).sum(),
                    None => c.iter().map(|v| v * v).sum(),
                }
            })
            .collect();
        let wsum = w.map_or(x.nrows() as f64, |w| w.iter().sum());
        Cd {
            x,
            w,
            xw2,
            wsum,
            thresholds,
            intercept,
        }
    }

    fn residual(&self, z: &[f64], beta: &[f64], b0: f64) -> Vec<f64> {
        let eta = self.x.mul_vec(beta);
        z.iter().zip(eta).map(|(z, e)| z - e - b0).collect()
    }

    fn update(&self, j: usize, r: &mut [f64], beta: &mut [f64]) -> f64 {
        let a = self.xw2[j];
        if a == 0.0 {
            return 0.0;
        }
        let col = self.x.col(j);
        let g: f64 = match self.w {
            Some(w) => col.iter().zip(w).zip(r.iter()).map(|((x, w), r)| x * w * r).sum(),
            None => col.iter().zip(r.iter()).map(|(x, r)| x * r).sum(),
        };
        let old = beta[j];
        let new = soft_threshold(g + a * old, self.thresholds[j]) / a;
        let delta = new - old;
        if delta != 0.0 {
            beta[j] = new;
            for (ri, xi) in r.iter_mut().zip(col) {
                *ri -= xi * delta;
            }
        }
        delta.abs()
    }

    fn update_intercept(&self, r: &mut [f64], b0: &mut f64) -> f64 {
        if !self.intercept || self.wsum == 0.0 {
            return 0.0;
        }
        let s: f64 = match self.w {
            Some(w) => w.iter().zip(r.iter()).map(|(w, r)| w * r).sum(),
            None => r.iter().sum(),
        };
        let delta = s / self.wsum;
        if delta != 0.0 {
            *b0 += delta;
            for ri in r.iter_mut() {
                *ri -= delta;
            }
        }
        delta.abs()
    }

    /// Runs sweeps until the largest change falls below `tol`; returns whether
    /// that happened before `budget` sweeps were used up.
    fn solve(&self, r: &mut [f64], beta: &mut [f64], b0: &mut f64, tol: f64, budget: &mut usize) -> bool {
        let p = beta.len();
        let mut active: Vec<usize> = Vec::with_capacity(p);
        loop {
            if *budget == 0 {
                return false;
            }
            *budget -= 1;
            let mut change = 0.0f64;
            for j in 0..p {
                change = change.max(self.update(j, r, beta));
            }
            change = change.max(self.update_intercept(r, b0));
            if change < tol {
                return true;
            }
            active.clear();
            active.extend((0..p).filter(|&j| beta[j] != 0.0));
            loop {
                if *budget == 0 {
                    return false;
                }
                *budget -= 1;
                let mut change = 0.0f64;
                for &j in &active {
                    change = change.max(self.update(j, r, beta));
                }
                change = change.max(self.update_intercept(r, b0));
                if change < tol {
                    break;
                }
            }
        }
    }
}

/// Smallest inner tolerance tried when tightening to meet the KKT target.
const MIN_INNER_TOL: f64 = 1e-15;

/// Maximizes `l(beta) - n * lambda * sum_j f_j |beta_j|`.
///
/// The returned fit is flagged converged only when the subgradient conditions
/// hold to `kkt_tol`. Hitting an iteration cap returns the last iterate with
/// `converged == false`.
pub fn weighted_lasso(problem: &WeightedLassoProblem<'_>, warm_start: Option<(&[f64], f64)>) -> Result<FitResult> {
    problem.validate()?;
    let data = problem.data;
    let p = data.p();
    let (mut beta, mut b0) = match warm_start {
        Some((b, b0)) => {
            if b.len() != p {
                return Err(Error::dims("warm start length differs from column count"));
            }
            (b.to_vec(), if data.intercept() { b0 } else { 0.0 })
        }
        None => (vec![0.0; p], null_intercept(data)),
    };
    let nlam = data.n() as f64 * problem.lambda;
    let thresholds: Vec<f64> = problem.penalty_factors.iter().map(|f| nlam * f).collect();
    match data.family() {
        Family::Gaussian => gaussian(problem, &thresholds, &mut beta, &mut b0),
        Family::Logistic => logistic(problem, &thresholds, &mut beta, &mut b0),
    }
}

/// Maximum-likelihood intercept of the model without covariates (0 when the
/// dataset has no intercept).
pub fn null_intercept(data: &Dataset) -> f64 {
    if !data.intercept() {
        return 0.0;
    }
    let ybar = data.y().iter().sum::<f64>() / data.n() as f64;
    match data.family() {
        Family::Gaussian => ybar,
        Family::Logistic => {
            let m = ybar.clamp(glm::MU_EPS, 1.0 - glm::MU_EPS);
            crate::num::ln(m / (1.0 - m)).clamp(-glm::ETA_CLAMP, glm::ETA_CLAMP)
        }
    }
}

fn finish(problem: &WeightedLassoProblem<'_>, beta: Vec<f64>, b0: f64, converged: bool, iterations: usize) -> Result<FitResult> {
    let data = problem.data;
    let objective = lasso_objective(data, &beta, b0, problem.lambda, &problem.penalty_factors)?;
    if !objective.is_finite() {
        return Err(Error::NonFinite("weighted LASSO objective".into()));
    }
    let kkt = kkt_residual(data, &beta, b0, problem.lambda, &problem.penalty_factors)?;
    Ok(FitResult {
        beta,
        intercept: b0,
        converged: converged && kkt <= problem.options.kkt_tol,
        iterations,
        kkt_residual: kkt,
        objective,
    })
}

fn gaussian(problem: &WeightedLassoProblem<'_>, thresholds: &[f64], beta: &mut Vec<f64>, b0: &mut f64) -> Result<FitResult> {
    let data = problem.data;
    let opts = &problem.options;
    let cd = Cd::new(data.x(), None, thresholds, data.intercept());
    let mut r = cd.residual(data.y(), beta, *b0);
    let mut budget = opts.max_inner_sweeps;
    let mut tol = opts.inner_tol;
    let mut converged = false;
    loop {
        let done = cd.solve(&mut r, beta, b0, tol, &mut budget);
        if !done {
            break;
        }
        let kkt = kkt_residual(data, beta, *b0, problem.lambda, &problem.penalty_factors)?;
        if kkt <= opts.kkt_tol {
            converged = true;
            break;
        }
        if tol <= MIN_INNER_TOL {
            break;
        }
        tol = (tol * 1e-2).max(MIN_INNER_TOL);
        // refresh the residual to shed accumulated rounding
        r = cd.residual(data.y(), beta, *b0);
    }
    let used = opts.max_inner_sweeps - budget;
    finish(problem, core::mem::take(beta), *b0, converged, used)
}

fn logistic(problem: &WeightedLassoProblem<'_>, thresholds: &[f64], beta: &mut Vec<f64>, b0: &mut f64) -> Result<FitResult> {
    let data = problem.data;
    let opts = &problem.options;
    let factors = &problem.penalty_factors;
    let mut objective = lasso_objective(data, beta, *b0, problem.lambda, factors)?;
    if !objective.is_finite() {
        return Err(Error::NonFinite("logistic objective at the starting point".into()));
    }
    let mut tol = opts.inner_tol;
    let mut converged = false;
    let mut steps = 0;
    while steps < opts.max_irls {
        steps += 1;
        let eta = glm::linear_predictor(data.x(), beta, *b0)?;
        let state = glm::irls_working(data, &eta)?;
        let cd = Cd::new(data.x(), Some(&state.working_weights), thresholds, data.intercept());
        let mut nb = beta.clone();
        let mut nb0 = *b0;
        let mut r = cd.residual(&state.working_response, &nb, nb0);
        let mut budget = opts.max_inner_sweeps;
        cd.solve(&mut r, &mut nb, &mut nb0, tol, &mut budget);

        let mut new_obj = lasso_objective(data, &nb, nb0, problem.lambda, factors)?;
        let mut halvings = 0;
        while !(new_obj >= objective - 1e-12 * objective.abs()) && halvings < 30 {
            halvings += 1;
            for (n, o) in nb.iter_mut().zip(beta.iter()) {
                *n = o + 0.5 * (*n - o);
            }
            nb0 = *b0 + 0.5 * (nb0 - *b0);
            new_obj = lasso_objective(data, &nb, nb0, problem.lambda, factors)?;
        }
        if !new_obj.is_finite() {
            return Err(Error::NonFinite("logistic objective".into()));
        }
        let change = nb
            .iter()
            .zip(beta.iter())
            .map(|(a, b)| (a - b).abs())
            .fold((nb0 - *b0).abs(), f64::max);
        *beta = nb;
        *b0 = nb0;
        objective = new_obj;
        if change < opts.inner_tol {
            let kkt = kkt_residual(data, beta, *b0, problem.lambda, factors)?;
            if kkt <= opts.kkt_tol {
                converged = true;
                break;
            }
            if tol <= MIN_INNER_TOL {
                break;
            }
            tol = (tol * 1e-2).max(MIN_INNER_TOL);
        }
    }
    finish(problem, core::mem::take(beta), *b0, converged, steps)
}

/// A fit of the taxonomy-structured estimator at one `lambda`.
#[derive(Debug, Clone, PartialEq)]
pub struct PhiLassoFit {
    pub beta: Vec<f64>,
    pub intercept: f64,
    pub lambda: f64,
    /// Partial inverse of `beta` (balanced for `q = 1`).
    pub decomposition: Decomposition,
    /// Reweighting steps taken after the initial LASSO.
    pub outer_iterations: usize,
    pub converged: bool,
    /// `l(beta) - n * lambda * (sum d + ||alpha||_1)` at the partial inverse.
    pub objective: f64,
    /// KKT residual of the final weighted LASSO.
    pub kkt_residual: f64,
    /// Objective after the initial LASSO and after every reweighting step.
    pub objective_trace: Vec<f64>,
    /// For every reweighting step, the number of coefficients that entered
    /// from a zero lineage product (and so carried the unit penalty factor).
    /// Ascent of the objective is only guaranteed across steps with none.
    pub revivals: Vec<usize>,
    /// Penalty factors of the final weighted LASSO.
    pub penalty_factors: Vec<f64>,
}

impl PhiLassoFit {
    pub fn support(&self) -> Vec<usize> {
        self.beta
            .iter()
            .enumerate()
            .filter(|(_, b)| **b != 0.0)
            .map(|(j, _)| j)
            .collect()
    }
}

fn equilibrium_opts() -> EquilibriumOptions {
    EquilibriumOptions {
        tol: 1e-12,
        max_sweeps: 100_000,
    }
}

/// Objective of the structured estimator at `beta`:
/// `l(beta) - n * lambda * penalty(psi(beta))`.
pub fn objective(data: &Dataset, taxonomy: &Taxonomy, beta: &[f64], intercept: f64, lambda: f64) -> Result<f64> {
    let decomp = decompose::partial_inverse_with(beta, taxonomy, 1.0, &equilibrium_opts())?.decomposition;
    objective_at(data, &decomp, beta, intercept, lambda)
}

fn objective_at(data: &Dataset, decomp: &Decomposition, beta: &[f64], intercept: f64, lambda: f64) -> Result<f64> {
    let ll = glm::log_likelihood(data, beta, intercept)?;
    Ok(ll - data.n() as f64 * lambda * decompose::penalty_decomposed(decomp, 1.0))
}

struct Reweighting {
    decomposition: Decomposition,
    factors: Vec<f64>,
    /// Coefficients whose lineage product is zero.
    unweighted: Vec<bool>,
}

/// Penalty factors `1 / w` with `w` from the partial inverse of `beta`.
fn reweight(beta: &[f64], taxonomy: &Taxonomy) -> Result<Reweighting> {
    let decomposition = decompose::partial_inverse_with(beta, taxonomy, 1.0, &equilibrium_opts())?.decomposition;
    let prod = decompose::lineage_products(&decomposition, taxonomy)?;
    let unweighted = prod.iter().map(|&w| w == 0.0).collect();
    let w = decompose::weights_from(&decomposition, taxonomy)?;
    let factors = w.0.iter().map(|w| (1.0 / w).min(f64::MAX)).collect();
    Ok(Reweighting {
        decomposition,
        factors,
        unweighted,
    })
}

/// Adaptive reweighting: an initial plain LASSO, then weighted LASSO fits
/// with factors `1 / phi(D(beta_prev), 1)` until the coefficients move less
/// than `outer_tol`.
///
/// `warm_start` only seeds the inner solver of the initial LASSO.
pub fn phi_lasso_fit(
    data: &Dataset,
    taxonomy: &Taxonomy,
    lambda: f64,
    options: &SolverOptions,
    warm_start: Option<(&[f64], f64)>,
) -> Result<PhiLassoFit> {
    if taxonomy.p() != data.p() {
        return Err(Error::dims(alloc::format!(
            "taxonomy covers {} covariates, design has {}",
            taxonomy.p(),
            data.p()
        )));
    }
    let initial = WeightedLassoProblem::lasso(data, lambda, *options)?;
    let mut fit = weighted_lasso(&initial, warm_start)?;
    let Reweighting {
        decomposition: mut decomp,
        mut factors,
        mut unweighted,
    } = reweight(&fit.beta, taxonomy)?;
    let mut trace = vec![objective_at(data, &decomp, &fit.beta, fit.intercept, lambda)?];
    let mut revivals = Vec::new();
    let mut outer = 0;
    let mut converged = false;
    let mut last_factors = initial.penalty_factors;
    while outer < options.max_outer {
        outer += 1;
        let problem = WeightedLassoProblem::new(data, lambda, factors.clone(), *options)?;
        let next = weighted_lasso(&problem, Some((&fit.beta, fit.intercept)))?;
        let change = next
            .beta
            .iter()
            .zip(&fit.beta)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        fit = next;
        last_factors = factors;
        revivals.push(
            fit.beta
                .iter()
                .zip(&unweighted)
                .filter(|(b, u)| **u && **b != 0.0)
                .count(),
        );
        let rw = reweight(&fit.beta, taxonomy)?;
        decomp = rw.decomposition;
        factors = rw.factors;
        unweighted = rw.unweighted;
        trace.push(objective_at(data, &decomp, &fit.beta, fit.intercept, lambda)?);
        if change < options.outer_tol {
            converged = fit.converged;
            break;
        }
    }
    let objective = *trace.last().unwrap_or(&f64::NAN);
    Ok(PhiLassoFit {
        beta: fit.beta,
        intercept: fit.intercept,
        lambda,
        decomposition: decomp,
        outer_iterations: outer,
        converged,
        objective,
        kkt_residual: fit.kkt_residual,
        objective_trace: trace,
        revivals,
        penalty_factors: last_factors,
    })
}

/// Fits a descending grid, warm-starting each point from the last successful
/// fit. Failures at individual points are returned in place.
pub fn phi_lasso_path(
    data: &Dataset,
    taxonomy: &Taxonomy,
    grid: &[f64],
    options: &SolverOptions,
) -> Result<Vec<Result<PhiLassoFit>>> {
    check_grid(grid)?;
    let mut out: Vec<Result<PhiLassoFit>> = Vec::with_capacity(grid.len());
    let mut warm: Option<(Vec<f64>, f64)> = None;
    for &lambda in grid {
        let res = phi_lasso_fit(
            data,
            taxonomy,
            lambda,
            options,
            warm.as_ref().map(|(b, b0)| (b.as_slice(), *b0)),
        );
        if let Ok(fit) = &res {
            warm = Some((fit.beta.clone(), fit.intercept));
        }
        out.push(res);
    }
    Ok(out)
}

/// Grids must be positive, finite and strictly decreasing.
pub fn check_grid(grid: &[f64]) -> Result<()> {
    if grid.iter().any(|l| !(*l > 0.0 && l.is_finite())) {
        return Err(Error::arg("lambda grid values must be positive and finite"));
    }
    if grid.windows(2).any(|w| w[1] >= w[0]) {
        return Err(Error::arg("lambda grid must be strictly decreasing"));
    }
    Ok(())
}
