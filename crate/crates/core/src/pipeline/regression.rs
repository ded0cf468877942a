//! Least-squares fit of `log10(runtime)` against `n`.

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum RegressionError {
    #[error("need at least two distinct n values")]
    TooFewSizes,
    #[error("runtime {0} is not positive")]
    NonPositiveRuntime(f64),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RegressionFit {
    pub slope: f64,
    pub intercept: f64,
    /// `log10(t) - (intercept + slope * n)` per record, in input order.
    pub residuals: Vec<f64>,
    pub r_squared: f64,
}

impl RegressionFit {
    pub fn predict_log10(&self, n: f64) -> f64 {
        self.intercept + self.slope * n
    }
}

pub fn fit_runtime_regression(records: &[(usize, f64)]) -> Result<RegressionFit, RegressionError> {
    if let Some(&(_, t)) = records.iter().find(|(_, t)| !(*t > 0.0)) {
        return Err(RegressionError::NonPositiveRuntime(t));
    }
    let first = records.first().map(|r| r.0);
    if records.iter().all(|r| Some(r.0) == first) {
        return Err(RegressionError::TooFewSizes);
    }
    let k = records.len() as f64;
    let xs: Vec<f64> = records.iter().map(|r| r.0 as f64).collect();
    let ys: Vec<f64> = records.iter().map(|r| r.1.log10()).collect();
    let mx = xs.iter().sum::<f64>() / k;
    let my = ys.iter().sum::<f64>() / k;
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let residuals: Vec<f64> = xs.iter().zip(&ys).map(|(x, y)| y - (intercept + slope * x)).collect();
    let ss_res: f64 = residuals.iter().map(|r| r * r).sum();
    let ss_tot: f64 = ys.iter().map(|y| (y - my).powi(2)).sum();
    let r_squared = if ss_tot > 0.0 { 1.0 - ss_res / ss_tot } else { 1.0 };
    Ok(RegressionFit {
        slope,
        intercept,
        residuals,
        r_squared,
    })
}
