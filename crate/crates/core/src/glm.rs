//! Likelihood layer for the Gaussian (identity link) and Bernoulli (logit
//! link) families.
//!
//! The Gaussian log-likelihood uses the unit-variance convention
//! `-(1/2) sum (y - eta)^2`; the dispersion does not affect the coefficient
//! optimization and is not estimated.

use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::matrix::Matrix;
use crate::num::{exp, ln_1p};
use crate::{Error, Result};

/// Linear predictors are clamped to this magnitude before exponentiation.
pub const ETA_CLAMP: f64 = 40.0;
/// Fitted probabilities are kept in `[MU_EPS, 1 - MU_EPS]`.
pub const MU_EPS: f64 = 1e-15;
/// Lower bound on IRLS working weights.
pub const WEIGHT_FLOOR: f64 = 1e-5;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Family {
    Gaussian,
    #[serde(alias = "logit", alias = "binomial")]
    Logistic,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    x: Matrix,
    y: Vec<f64>,
    family: Family,
    intercept: bool,
}

impl Dataset {
    pub fn new(x: Matrix, y: Vec<f64>, family: Family, intercept: bool) -> Result<Self> {
        if x.nrows() != y.len() {
            return Err(Error::dims(alloc::format!(
                "design has {} rows but response has {} values",
                x.nrows(),
                y.len()
            )));
        }
        if x.nrows() == 0 || x.ncols() == 0 {
            return Err(Error::arg("dataset needs n >= 1 and p >= 1"));
        }
        if !x.is_finite() || y.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("dataset entries".into()));
        }
        if family == Family::Logistic && y.iter().any(|&v| v != 0.0 && v != 1.0) {
            return Err(Error::arg("logistic responses must be 0 or 1"));
        }
        Ok(Dataset {
            x,
            y,
            family,
            intercept,
        })
    }

    pub fn x(&self) -> &Matrix {
        &self.x
    }

    pub fn y(&self) -> &[f64] {
        &self.y
    }

    pub fn family(&self) -> Family {
        self.family
    }

    pub fn intercept(&self) -> bool {
        self.intercept
    }

    pub fn n(&self) -> usize {
        self.y.len()
    }

    pub fn p(&self) -> usize {
        self.x.ncols()
    }

    /// Rows `rows` of this dataset, in the given order.
    pub fn subset(&self, rows: &[usize]) -> Dataset {
        Dataset {
            x: self.x.select_rows(rows),
            y: rows.iter().map(|&i| self.y[i]).collect(),
            family: self.family,
            intercept: self.intercept,
        }
    }

    pub fn with_intercept(mut self, intercept: bool) -> Dataset {
        self.intercept = intercept;
        self
    }

    /// Divides each row by its sum (rows summing to zero are left as is).
    pub fn normalize_rows(&self) -> Dataset {
        let mut x = self.x.clone();
        for i in 0..x.nrows() {
            let s: f64 = (0..x.ncols()).map(|j| x.get(i, j)).sum();
            if s != 0.0 {
                for j in 0..x.ncols() {
                    let v = x.get(i, j) / s;
                    x.set(i, j, v);
                }
            }
        }
        Dataset { x, ..self.clone() }
    }

    /// Scales columns to unit variance, centering them first when the dataset
    /// has an intercept. Returns the transformed dataset with the column
    /// shifts (0 without an intercept) and scales (constant columns keep
    /// scale 1). Coefficients fitted on the result map back as
    /// `beta_j / scale_j`.
    pub fn standardized(&self) -> (Dataset, Vec<f64>, Vec<f64>) {
        let n = self.n() as f64;
        let mut x = self.x.clone();
        let mut means = Vec::with_capacity(self.p());
        let mut scales = Vec::with_capacity(self.p());
        for j in 0..self.p() {
            let col = x.col_mut(j);
            let m = col.iter().sum::<f64>() / n;
            let var = col.iter().map(|v| (v - m) * (v - m)).sum::<f64>() / n;
            let s = if var > 0.0 { crate::num::sqrt(var) } else { 1.0 };
            let shift = if self.intercept { m } else { 0.0 };
            for v in col.iter_mut() {
                *v = (*v - shift) / s;
            }
            means.push(shift);
            scales.push(s);
        }
        (Dataset { x, ..self.clone() }, means, scales)
    }

    fn check_beta(&self, beta: &[f64]) -> Result<()> {
        if beta.len() == self.p() {
            Ok(())
        } else {
            Err(Error::dims(alloc::format!(
                "beta has {} entries, design has {} columns",
                beta.len(),
                self.p()
            )))
        }
    }
}

/// `X beta + intercept`.
pub fn linear_predictor(x: &Matrix, beta: &[f64], intercept: f64) -> Result<Vec<f64>> {
    if beta.len() != x.ncols() {
        return Err(Error::dims("beta length differs from column count"));
    }
    let mut eta = x.mul_vec(beta);
    if intercept != 0.0 {
        for e in &mut eta {
            *e += intercept;
        }
    }
    Ok(eta)
}

/// Numerically guarded inverse logit.
#[inline]
pub fn logistic(eta: f64) -> f64 {
    let e = eta.clamp(-ETA_CLAMP, ETA_CLAMP);
    let mu = 1.0 / (1.0 + exp(-e));
    mu.clamp(MU_EPS, 1.0 - MU_EPS)
}

/// `log(1 + exp(eta))` without overflow.
#[inline]
fn softplus(eta: f64) -> f64 {
    eta.max(0.0) + ln_1p(exp(-eta.abs()))
}

/// Inverse link.
#[inline]
pub fn mean(family: Family, eta: f64) -> f64 {
    match family {
        Family::Gaussian => eta,
        Family::Logistic => logistic(eta),
    }
}

/// Log-likelihood given linear predictors.
pub fn log_likelihood_eta(family: Family, y: &[f64], eta: &[f64]) -> f64 {
    match family {
        Family::Gaussian => -0.5 * y.iter().zip(eta).map(|(y, e)| (y - e) * (y - e)).sum::<f64>(),
        Family::Logistic => y.iter().zip(eta).map(|(y, &e)| y * e - softplus(e)).sum(),
    }
}

pub fn log_likelihood(data: &Dataset, beta: &[f64], intercept: f64) -> Result<f64> {
    data.check_beta(beta)?;
    let eta = linear_predictor(&data.x, beta, intercept)?;
    Ok(log_likelihood_eta(data.family, &data.y, &eta))
}

/// Gradient of the log-likelihood in `beta`; the intercept component is
/// appended last when the dataset has an intercept.
pub fn gradient(data: &Dataset, beta: &[f64], intercept: f64) -> Result<Vec<f64>> {
    data.check_beta(beta)?;
    let eta = linear_predictor(&data.x, beta, intercept)?;
    let resid: Vec<f64> = data
        .y
        .iter()
        .zip(&eta)
        .map(|(&y, &e)| y - mean(data.family, e))
        .collect();
    let mut g = data.x.t_mul_vec(&resid);
    if data.intercept {
        g.push(resid.iter().sum());
    }
    Ok(g)
}

/// Linear predictor with its mean and the IRLS linearization.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearPredictorState {
    pub eta: Vec<f64>,
    pub mu: Vec<f64>,
    pub working_weights: Vec<f64>,
    pub working_response: Vec<f64>,
}

/// IRLS working weights `mu (1 - mu)` (floored) and working response
/// `eta + (y - mu) / w`. For the Gaussian family the weights are 1 and the
/// working response is `y`.
pub fn irls_working(data: &Dataset, eta: &[f64]) -> Result<LinearPredictorState> {
    if eta.len() != data.n() {
        return Err(Error::dims("eta length differs from sample count"));
    }
    let n = data.n();
    let mut mu = Vec::with_capacity(n);
    let mut w = Vec::with_capacity(n);
    let mut z = Vec::with_capacity(n);
    for (&e, &y) in eta.iter().zip(&data.y) {
        match data.family {
            Family::Gaussian => {
                mu.push(e);
                w.push(1.0);
                z.push(y);
            }
            Family::Logistic => {
                let m = logistic(e);
                let wi = (m * (1.0 - m)).max(WEIGHT_FLOOR);
                mu.push(m);
                w.push(wi);
                z.push(e + (y - m) / wi);
            }
        }
    }
    Ok(LinearPredictorState {
        eta: eta.to_vec(),
        mu,
        working_weights: w,
        working_response: z,
    })
}

/// Predicted means `g^{-1}(X beta + intercept)`.
pub fn predict(family: Family, x: &Matrix, beta: &[f64], intercept: f64) -> Result<Vec<f64>> {
    let eta = linear_predictor(x, beta, intercept)?;
    Ok(eta.into_iter().map(|e| mean(family, e)).collect())
}
