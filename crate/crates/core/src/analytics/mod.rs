//! Latency regression and cost models.

pub mod cost;
pub mod ols;

pub use cost::{
    crossover, per_resource_cost, per_use_cost, CostError, CostLine, CostReport, Crossover, CrossoverPoint,
    PriceSheet, UsageProfile,
};
pub use ols::{fit, Coefficient, FitError, RegressionFit};

use crate::bench::LatencySample;

/// Predictor columns a latency sample provides.
pub const PREDICTORS: [&str; 3] = ["n", "r", "r_prime"];

fn predictor_value(s: &LatencySample, name: &str) -> Option<f64> {
    match name {
        "n" => Some(s.n as f64),
        "r" => Some(s.r as f64),
        "r_prime" => Some(s.r_prime as f64),
        _ => None,
    }
}

/// Fit `elapsed_ms` against the named predictors of each sample.
pub fn fit_samples(samples: &[LatencySample], predictors: &[&str]) -> Result<RegressionFit, SampleFitError> {
    if let Some(bad) = predictors.iter().find(|p| !PREDICTORS.contains(p)) {
        return Err(SampleFitError::UnknownPredictor(bad.to_string()));
    }
    let columns: Vec<Vec<f64>> = predictors
        .iter()
        .map(|p| samples.iter().filter_map(|s| predictor_value(s, p)).collect())
        .collect();
    let response: Vec<f64> = samples.iter().map(|s| s.elapsed_ms).collect();
    Ok(fit(predictors, &columns, &response)?)
}

#[derive(Debug, thiserror::Error, Clone, PartialEq)]
pub enum SampleFitError {
    #[error("unknown predictor `{0}` (expected one of n, r, r_prime)")]
    UnknownPredictor(String),
    #[error(transparent)]
    Fit(#[from] FitError),
}
