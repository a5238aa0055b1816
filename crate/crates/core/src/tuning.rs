//! Lambda grids, cross-validation, validation-set tuning and evaluation
//! metrics.

use alloc::vec;
use alloc::vec::Vec;

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::glm::{self, Dataset, Family};
use crate::num::ln;
use crate::rng::{derived_rng, purpose};
use crate::solver::{self, PhiLassoFit, SolverOptions};
use crate::taxonomy::Taxonomy;
use crate::{Error, Result};

/// Share of failed folds above which a lambda is not eligible for selection.
pub const MAX_FAILED_FOLD_SHARE: f64 = 0.1;

/// Smallest lambda at which the plain LASSO is all zero:
/// `max_j |grad_j l(0, b0)| / n`, with `b0` the null-model intercept.
pub fn lambda_max(data: &Dataset) -> Result<f64> {
    if data.x().as_col_major().iter().all(|v| *v == 0.0) {
        return Err(Error::arg("design matrix is all zero"));
    }
    let b0 = solver::null_intercept(data);
    let g = glm::gradient(data, &vec![0.0; data.p()], b0)?;
    let lmax = g[..data.p()].iter().map(|v| v.abs()).fold(0.0, f64::max) / data.n() as f64;
    if !(lmax > 0.0 && lmax.is_finite()) {
        return Err(Error::arg("response is orthogonal to every covariate; lambda_max is 0"));
    }
    Ok(lmax)
}

/// `n_points` values spaced geometrically from `lambda_max` down to
/// `lambda_max * min_ratio`.
pub fn lambda_grid(data: &Dataset, n_points: usize, min_ratio: f64) -> Result<Vec<f64>> {
    geometric_grid(lambda_max(data)?, n_points, min_ratio)
}

pub fn geometric_grid(lambda_max: f64, n_points: usize, min_ratio: f64) -> Result<Vec<f64>> {
    if n_points == 0 {
        return Err(Error::arg("grid needs at least one point"));
    }
    if !(min_ratio > 0.0 && min_ratio < 1.0) {
        return Err(Error::arg("min_ratio must lie in (0, 1)"));
    }
    if !(lambda_max > 0.0 && lambda_max.is_finite()) {
        return Err(Error::arg("lambda_max must be positive"));
    }
    if n_points == 1 {
        return Ok(vec![lambda_max]);
    }
    let step = ln(min_ratio) / (n_points - 1) as f64;
    Ok((0..n_points)
        .map(|k| lambda_max * crate::num::exp(step * k as f64))
        .collect())
}

fn check_labels(labels: &[f64]) -> Result<()> {
    if labels.iter().any(|&y| y != 0.0 && y != 1.0) {
        return Err(Error::arg("labels must be 0 or 1"));
    }
    Ok(())
}

/// Mann-Whitney AUC with midranks: `P(s+ > s-) + P(s+ = s-) / 2`.
pub fn auc(scores: &[f64], labels: &[f64]) -> Result<f64> {
    if scores.len() != labels.len() {
        return Err(Error::dims("scores and labels differ in length"));
    }
    check_labels(labels)?;
    if scores.iter().any(|s| s.is_nan()) {
        return Err(Error::NonFinite("AUC scores".into()));
    }
    let n_pos = labels.iter().filter(|&&y| y == 1.0).count();
    let n_neg = labels.len() - n_pos;
    if n_pos == 0 || n_neg == 0 {
        return Err(Error::SingleClass);
    }
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[a].total_cmp(&scores[b]));
    // twice the rank sum of the positives keeps midranks integral
    let mut rank_sum2: u128 = 0;
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && scores[order[j + 1]] == scores[order[i]] {
            j += 1;
        }
        let mid2 = (i + 1 + j + 1) as u128;
        let pos = order[i..=j].iter().filter(|&&k| labels[k] == 1.0).count() as u128;
        rank_sum2 += mid2 * pos;
        i = j + 1;
    }
    let np = n_pos as u128;
    // 2 U = 2 R - n_pos (n_pos + 1)
    let u2 = rank_sum2 - np * (np + 1);
    Ok(u2 as f64 / (2 * n_pos * n_neg) as f64)
}

/// Mean squared probability error.
pub fn brier(probabilities: &[f64], labels: &[f64]) -> Result<f64> {
    if probabilities.len() != labels.len() {
        return Err(Error::dims("probabilities and labels differ in length"));
    }
    if probabilities.is_empty() {
        return Err(Error::arg("no predictions"));
    }
    check_labels(labels)?;
    if probabilities.iter().any(|p| !(0.0..=1.0).contains(p)) {
        return Err(Error::arg("probabilities must lie in [0, 1]"));
    }
    let s: f64 = probabilities.iter().zip(labels).map(|(p, y)| (p - y) * (p - y)).sum();
    Ok(s / labels.len() as f64)
}

/// Mean deviance per sample: squared error for the Gaussian family,
/// `-2 [y ln p + (1 - y) ln(1 - p)]` for the logistic family.
pub fn mean_deviance(family: Family, predictions: &[f64], y: &[f64]) -> Result<f64> {
    if predictions.len() != y.len() {
        return Err(Error::dims("predictions and responses differ in length"));
    }
    if predictions.is_empty() {
        return Err(Error::arg("no predictions"));
    }
    let s: f64 = match family {
        Family::Gaussian => predictions.iter().zip(y).map(|(p, y)| (p - y) * (p - y)).sum(),
        Family::Logistic => predictions
            .iter()
            .zip(y)
            .map(|(&p, &y)| {
                let p = p.clamp(glm::MU_EPS, 1.0 - glm::MU_EPS);
                -2.0 * (y * ln(p) + (1.0 - y) * ln(1.0 - p))
            })
            .sum(),
    };
    Ok(s / y.len() as f64)
}

/// `(recall, precision)` of the estimated nonzero pattern against the truth.
/// Precision is 1 when nothing is selected.
pub fn support_metrics(estimated: &[f64], truth: &[f64]) -> Result<(f64, f64)> {
    if estimated.len() != truth.len() {
        return Err(Error::dims("estimate and truth differ in length"));
    }
    let (mut tp, mut fp, mut fneg) = (0usize, 0usize, 0usize);
    for (&e, &t) in estimated.iter().zip(truth) {
        match (e != 0.0, t != 0.0) {
            (true, true) => tp += 1,
            (true, false) => fp += 1,
            (false, true) => fneg += 1,
            (false, false) => {}
        }
    }
    let recall = if tp + fneg == 0 { 1.0 } else { tp as f64 / (tp + fneg) as f64 };
    let precision = if tp + fp == 0 { 1.0 } else { tp as f64 / (tp + fp) as f64 };
    Ok((recall, precision))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PerformanceRecord {
    /// Estimation error `||beta_hat - beta0||^2`.
    pub sse: f64,
    /// Mean squared prediction error on the validation set.
    pub mspe: f64,
    pub recall: f64,
    pub precision: f64,
}

/// Mean of `(y - y_hat)^2` over a dataset.
pub fn mspe(data: &Dataset, beta: &[f64], intercept: f64) -> Result<f64> {
    let pred = glm::predict(data.family(), data.x(), beta, intercept)?;
    let s: f64 = pred.iter().zip(data.y()).map(|(p, y)| (p - y) * (p - y)).sum();
    Ok(s / data.n() as f64)
}

pub fn estimation_errors(beta: &[f64], intercept: f64, truth: &[f64], validation: &Dataset) -> Result<PerformanceRecord> {
    if beta.len() != truth.len() {
        return Err(Error::dims("estimate and truth differ in length"));
    }
    let sse = beta.iter().zip(truth).map(|(b, t)| (b - t) * (b - t)).sum();
    let (recall, precision) = support_metrics(beta, truth)?;
    Ok(PerformanceRecord {
        sse,
        mspe: mspe(validation, beta, intercept)?,
        recall,
        precision,
    })
}

/// How samples are split into cross-validation folds.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Folds {
    LeaveOneOut,
    /// `K` folds, stratified by class for the logistic family. `K >= n`
    /// is the leave-one-out split.
    KFold(usize),
}

/// Held-out index sets, each sorted ascending.
pub fn fold_assignment(data: &Dataset, folds: Folds, seed: u64) -> Result<Vec<Vec<usize>>> {
    let n = data.n();
    let k = match folds {
        Folds::LeaveOneOut => n,
        Folds::KFold(k) => k,
    };
    if k < 2 {
        return Err(Error::arg("cross-validation needs at least 2 folds"));
    }
    if n < 3 {
        return Err(Error::arg("cross-validation needs at least 3 samples"));
    }
    if k >= n {
        return Ok((0..n).map(|i| vec![i]).collect());
    }
    let mut rng = derived_rng(seed, purpose::FOLDS, k as u64, n as u64);
    let strata: Vec<Vec<usize>> = match data.family() {
        Family::Logistic => {
            let zeros = (0..n).filter(|&i| data.y()[i] == 0.0).collect();
            let ones = (0..n).filter(|&i| data.y()[i] == 1.0).collect();
            vec![zeros, ones]
        }
        Family::Gaussian => vec![(0..n).collect()],
    };
    let mut out = vec![Vec::new(); k];
    let mut slot = 0;
    for mut stratum in strata {
        stratum.shuffle(&mut rng);
        for i in stratum {
            out[slot % k].push(i);
            slot += 1;
        }
    }
    for f in &mut out {
        f.sort_unstable();
    }
    Ok(out)
}

/// One fitted model inside a fold.
#[derive(Debug, Clone, PartialEq)]
pub struct FoldFit {
    pub beta: Vec<f64>,
    pub intercept: f64,
    pub converged: bool,
    /// Predicted means for the held-out samples, in `held_out` order.
    pub predictions: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FoldResult {
    pub held_out: Vec<usize>,
    /// One entry per grid point; `Err` keeps the failure message.
    pub fits: Vec<core::result::Result<FoldFit, Error>>,
}

/// Fits the path on all samples outside `held_out` and predicts `held_out`.
pub fn cv_fold(
    data: &Dataset,
    taxonomy: &Taxonomy,
    grid: &[f64],
    options: &SolverOptions,
    held_out: &[usize],
) -> Result<FoldResult> {
    let n = data.n();
    let mut mask = vec![false; n];
    for &i in held_out {
        if i >= n {
            return Err(Error::arg("held-out index out of range"));
        }
        mask[i] = true;
    }
    let train_rows: Vec<usize> = (0..n).filter(|&i| !mask[i]).collect();
    let train = data.subset(&train_rows);
    let test = data.subset(held_out);
    let path = solver::phi_lasso_path(&train, taxonomy, grid, options)?;
    let fits = path
        .into_iter()
        .map(|r| {
            r.and_then(|fit: PhiLassoFit| {
                let predictions = glm::predict(data.family(), test.x(), &fit.beta, fit.intercept)?;
                Ok(FoldFit {
                    beta: fit.beta,
                    intercept: fit.intercept,
                    converged: fit.converged,
                    predictions,
                })
            })
        })
        .collect();
    Ok(FoldResult {
        held_out: held_out.to_vec(),
        fits,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct LambdaSummary {
    pub lambda: f64,
    /// Out-of-fold prediction for every sample (NaN where the fold failed).
    pub predictions: Vec<f64>,
    /// `None` for the Gaussian family or when a class is missing.
    pub auc: Option<f64>,
    pub brier: Option<f64>,
    pub deviance: Option<f64>,
    pub mean_support_size: f64,
    pub failed_folds: usize,
    pub nonconverged_folds: usize,
    /// Whether at most [`MAX_FAILED_FOLD_SHARE`] of the folds failed.
    pub eligible: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CvResult {
    pub family: Family,
    pub grid: Vec<f64>,
    pub folds: Vec<FoldResult>,
    pub per_lambda: Vec<LambdaSummary>,
    /// Largest AUC among eligible non-null models.
    pub best_by_auc: Option<f64>,
    pub best_by_brier: Option<f64>,
    pub best_by_deviance: Option<f64>,
}

/// Combines per-fold results into curves and selections. Ties go to the
/// larger lambda.
pub fn assemble_cv(data: &Dataset, grid: &[f64], folds: Vec<FoldResult>) -> Result<CvResult> {
    let n = data.n();
    let mut seen = vec![false; n];
    for f in &folds {
        if f.fits.len() != grid.len() {
            return Err(Error::dims("fold result length differs from grid"));
        }
        for &i in &f.held_out {
            if i >= n || seen[i] {
                return Err(Error::arg("folds must partition the samples"));
            }
            seen[i] = true;
        }
    }
    if seen.iter().any(|s| !s) {
        return Err(Error::arg("folds must partition the samples"));
    }
    let family = data.family();
    let mut per_lambda = Vec::with_capacity(grid.len());
    for (l, &lambda) in grid.iter().enumerate() {
        let mut predictions = vec![f64::NAN; n];
        let (mut failed, mut nonconv, mut support, mut ok) = (0usize, 0usize, 0usize, 0usize);
        for f in &folds {
            match &f.fits[l] {
                Ok(fit) => {
                    ok += 1;
                    nonconv += usize::from(!fit.converged);
                    support += fit.beta.iter().filter(|b| **b != 0.0).count();
                    for (&i, &p) in f.held_out.iter().zip(&fit.predictions) {
                        predictions[i] = p;
                    }
                }
                Err(_) => failed += 1,
            }
        }
        let avail: Vec<usize> = (0..n).filter(|&i| predictions[i].is_finite()).collect();
        let p_av: Vec<f64> = avail.iter().map(|&i| predictions[i]).collect();
        let y_av: Vec<f64> = avail.iter().map(|&i| data.y()[i]).collect();
        let (auc_v, brier_v) = match family {
            Family::Logistic => (auc(&p_av, &y_av).ok(), brier(&p_av, &y_av).ok()),
            Family::Gaussian => (None, None),
        };
        per_lambda.push(LambdaSummary {
            lambda,
            predictions,
            auc: auc_v,
            brier: brier_v,
            deviance: mean_deviance(family, &p_av, &y_av).ok(),
            mean_support_size: if ok == 0 { 0.0 } else { support as f64 / ok as f64 },
            failed_folds: failed,
            nonconverged_folds: nonconv,
            eligible: !folds.is_empty() && failed as f64 <= MAX_FAILED_FOLD_SHARE * folds.len() as f64,
        });
    }
    let pick = |score: &dyn Fn(&LambdaSummary) -> Option<f64>| {
        let mut best: Option<(f64, f64)> = None;
        for s in per_lambda.iter().filter(|s| s.eligible) {
            if let Some(v) = score(s) {
                if best.is_none_or(|(b, _)| v < b) {
                    best = Some((v, s.lambda));
                }
            }
        }
        best.map(|(_, l)| l)
    };
    let best_by_auc = pick(&|s| s.auc.filter(|_| s.mean_support_size > 0.0).map(|a| -a));
    let best_by_brier = pick(&|s| s.brier);
    let best_by_deviance = pick(&|s| s.deviance);
    Ok(CvResult {
        family,
        grid: grid.to_vec(),
        folds,
        per_lambda,
        best_by_auc,
        best_by_brier,
        best_by_deviance,
    })
}

/// Cross-validation, fitting the folds one after another.
pub fn cross_validate(
    data: &Dataset,
    taxonomy: &Taxonomy,
    grid: &[f64],
    options: &SolverOptions,
    folds: Folds,
    seed: u64,
) -> Result<CvResult> {
    solver::check_grid(grid)?;
    let assignment = fold_assignment(data, folds, seed)?;
    let results = assignment
        .iter()
        .map(|held| cv_fold(data, taxonomy, grid, options, held))
        .collect::<Result<Vec<_>>>()?;
    assemble_cv(data, grid, results)
}

pub fn loo_cv(data: &Dataset, taxonomy: &Taxonomy, grid: &[f64], options: &SolverOptions) -> Result<CvResult> {
    cross_validate(data, taxonomy, grid, options, Folds::LeaveOneOut, 0)
}

pub fn kfold_cv(
    data: &Dataset,
    taxonomy: &Taxonomy,
    grid: &[f64],
    options: &SolverOptions,
    k: usize,
    seed: u64,
) -> Result<CvResult> {
    cross_validate(data, taxonomy, grid, options, Folds::KFold(k), seed)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CovariateSelection {
    /// 0-based covariate index.
    pub index: usize,
    pub frequency: f64,
    pub mean_estimate: f64,
    pub se: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SelectionSummary {
    pub lambda: f64,
    /// Folds whose fit at `lambda` succeeded.
    pub folds: usize,
    /// One entry per covariate, in index order.
    pub covariates: Vec<CovariateSelection>,
}

impl SelectionSummary {
    /// Covariates selected in at least one fold.
    pub fn selected(&self) -> impl Iterator<Item = &CovariateSelection> {
        self.covariates.iter().filter(|c| c.frequency > 0.0)
    }
}

/// Per-covariate selection frequency, mean estimate and jackknife standard
/// error `sqrt((K-1)/K * sum_k (b_k - mean)^2)` over the successful folds.
pub fn selection_summary(cv: &CvResult, lambda: f64) -> Result<SelectionSummary> {
    let l = cv
        .grid
        .iter()
        .position(|g| (g - lambda).abs() <= 1e-12 * g.abs())
        .ok_or_else(|| Error::arg("lambda is not on the cross-validation grid"))?;
    let fits: Vec<&FoldFit> = cv.folds.iter().filter_map(|f| f.fits[l].as_ref().ok()).collect();
    let k = fits.len();
    if k == 0 {
        return Err(Error::arg("every fold failed at this lambda"));
    }
    let p = fits[0].beta.len();
    let kf = k as f64;
    let covariates = (0..p)
        .map(|j| {
            let selected = fits.iter().filter(|f| f.beta[j] != 0.0).count();
            let mean = fits.iter().map(|f| f.beta[j]).sum::<f64>() / kf;
            let ss: f64 = fits.iter().map(|f| (f.beta[j] - mean) * (f.beta[j] - mean)).sum();
            CovariateSelection {
                index: j,
                frequency: selected as f64 / kf,
                mean_estimate: mean,
                se: crate::num::sqrt((kf - 1.0) / kf * ss),
            }
        })
        .collect();
    Ok(SelectionSummary {
        lambda: cv.grid[l],
        folds: k,
        covariates,
    })
}

/// Validation-set tuning outcome.
#[derive(Debug, Clone, PartialEq)]
pub struct TuneResult {
    pub best_lambda: f64,
    /// Validation MSPE per grid point (`None` where the fit failed).
    pub mspe: Vec<Option<f64>>,
    pub fits: Vec<Result<PhiLassoFit>>,
}

/// Index of the smallest finite value; ties go to the earliest entry (the
/// larger lambda on a descending grid).
pub fn argmin_first(values: &[Option<f64>]) -> Option<usize> {
    let mut best: Option<(usize, f64)> = None;
    for (i, v) in values.iter().enumerate() {
        if let Some(v) = v.filter(|v| v.is_finite()) {
            if best.is_none_or(|(_, b)| v < b) {
                best = Some((i, v));
            }
        }
    }
    best.map(|(i, _)| i)
}

/// Fits the path on `train` and picks the lambda with the smallest
/// prediction error on `valid`.
pub fn validation_tune(
    train: &Dataset,
    valid: &Dataset,
    taxonomy: &Taxonomy,
    grid: &[f64],
    options: &SolverOptions,
) -> Result<TuneResult> {
    if train.p() != valid.p() {
        return Err(Error::dims("training and validation sets differ in width"));
    }
    let fits = solver::phi_lasso_path(train, taxonomy, grid, options)?;
    let mspe_v: Vec<Option<f64>> = fits
        .iter()
        .map(|f| f.as_ref().ok().and_then(|f| mspe(valid, &f.beta, f.intercept).ok()))
        .collect();
    let best = argmin_first(&mspe_v).ok_or_else(|| Error::arg("no grid point could be evaluated"))?;
    Ok(TuneResult {
        best_lambda: grid[best],
        mspe: mspe_v,
        fits,
    })
}
