//! Ordinary least squares with coefficient standard errors.
//!
//! The fit solves the same normal equations `XᵀX β = Xᵀl` through a
//! Householder QR of the column-scaled design matrix, which stays accurate
//! when predictors span six orders of magnitude and are nearly collinear.
//! `SE(βj) = sqrt(σ̂² [(XᵀX)⁻¹]jj)` with `σ̂² = RSS / (m − p)`.

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum FitError {
    #[error("need more samples than parameters: {samples} samples, {parameters} parameters")]
    TooFewSamples { samples: usize, parameters: usize },
    #[error("design matrix is rank deficient")]
    RankDeficient,
    #[error("expected {expected} predictor values, got {got}")]
    ArityMismatch { expected: usize, got: usize },
    #[error("non-finite input value")]
    NonFinite,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Coefficient {
    pub name: String,
    pub estimate: f64,
    pub std_error: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegressionFit {
    pub intercept: Coefficient,
    pub coefficients: Vec<Coefficient>,
    pub r_squared: f64,
    pub rss: f64,
    /// Sample count.
    pub m: usize,
    /// Parameter count, intercept included.
    pub p: usize,
}

impl RegressionFit {
    /// A fit whose every coefficient is zero.
    pub fn zero(predictors: &[&str]) -> Self {
        let coef = |name: &str| Coefficient {
            name: name.to_string(),
            estimate: 0.0,
            std_error: 0.0,
        };
        RegressionFit {
            intercept: coef("intercept"),
            coefficients: predictors.iter().map(|p| coef(p)).collect(),
            r_squared: 0.0,
            rss: 0.0,
            m: 0,
            p: predictors.len() + 1,
        }
    }

    /// Build a fit from known coefficients, e.g. a published model.
    pub fn from_coefficients(intercept: f64, slopes: &[(&str, f64)]) -> Self {
        let mut fit = Self::zero(&slopes.iter().map(|(n, _)| *n).collect::<Vec<_>>());
        fit.intercept.estimate = intercept;
        for (c, (_, b)) in fit.coefficients.iter_mut().zip(slopes) {
            c.estimate = *b;
        }
        fit
    }

    pub fn coefficient(&self, name: &str) -> Option<&Coefficient> {
        self.coefficients.iter().find(|c| c.name == name)
    }

    pub fn predict(&self, predictors: &[f64]) -> Result<f64, FitError> {
        if predictors.len() != self.coefficients.len() {
            return Err(FitError::ArityMismatch {
                expected: self.coefficients.len(),
                got: predictors.len(),
            });
        }
        Ok(self.intercept.estimate
            + self
                .coefficients
                .iter()
                .zip(predictors)
                .map(|(c, x)| c.estimate * x)
                .sum::<f64>())
    }
}

/// Fit `response = β0 + Σ βj · columns[j]`.
///
/// `columns[j][i]` is predictor `j` of sample `i`.
pub fn fit(names: &[&str], columns: &[Vec<f64>], response: &[f64]) -> Result<RegressionFit, FitError> {
    let m = response.len();
    let p = columns.len() + 1;
    if names.len() != columns.len() {
        return Err(FitError::ArityMismatch {
            expected: columns.len(),
            got: names.len(),
        });
    }
    if let Some(bad) = columns.iter().find(|c| c.len() != m) {
        return Err(FitError::ArityMismatch {
            expected: m,
            got: bad.len(),
        });
    }
    if m <= p {
        return Err(FitError::TooFewSamples {
            samples: m,
            parameters: p,
        });
    }
    if !response.iter().chain(columns.iter().flatten()).all(|v| v.is_finite()) {
        return Err(FitError::NonFinite);
    }

    // Column-major design matrix with a leading constant column, each column
    // scaled to unit Euclidean norm.
    let mut design: Vec<Vec<f64>> = std::iter::once(vec![1.0; m]).chain(columns.iter().cloned()).collect();
    let mut scale = vec![1.0; p];
    for (j, col) in design.iter_mut().enumerate() {
        let norm = col.iter().map(|v| v * v).sum::<f64>().sqrt();
        if norm == 0.0 {
            return Err(FitError::RankDeficient);
        }
        col.iter_mut().for_each(|v| *v /= norm);
        scale[j] = norm;
    }

    let (r, qty) = householder_qr(&mut design, response.to_vec());
    let max_diag = (0..p).map(|i| r[i][i].abs()).fold(0.0, f64::max);
    if (0..p).any(|i| r[i][i].abs() <= max_diag * 1e-13) {
        return Err(FitError::RankDeficient);
    }

    // Back-substitution R γ = (Qᵀy)[..p], then undo the column scaling.
    let mut gamma = vec![0.0; p];
    for i in (0..p).rev() {
        let s: f64 = (i + 1..p).map(|k| r[i][k] * gamma[k]).sum();
        gamma[i] = (qty[i] - s) / r[i][i];
    }
    let beta: Vec<f64> = gamma.iter().zip(&scale).map(|(g, s)| g / s).collect();

    // Residuals from the original data.
    let fitted = |i: usize| beta[0] + columns.iter().zip(&beta[1..]).map(|(c, b)| b * c[i]).sum::<f64>();
    let rss: f64 = (0..m).map(|i| (response[i] - fitted(i)).powi(2)).sum();
    let mean = response.iter().sum::<f64>() / m as f64;
    let tss: f64 = response.iter().map(|y| (y - mean).powi(2)).sum();
    let sigma2 = rss / (m - p) as f64;

    // diag((XᵀX)⁻¹) = diag(S⁻¹ R⁻¹ R⁻ᵀ S⁻¹); row j of R⁻¹ gives entry j.
    let r_inv = invert_upper(&r, p);
    let se: Vec<f64> = (0..p)
        .map(|j| {
            let d: f64 = (j..p).map(|k| r_inv[j][k].powi(2)).sum();
            (sigma2 * d).sqrt() / scale[j]
        })
        .collect();

    let coef = |name: &str, j: usize| Coefficient {
        name: name.to_string(),
        estimate: beta[j],
        std_error: se[j],
    };
    Ok(RegressionFit {
        intercept: coef("intercept", 0),
        coefficients: names.iter().enumerate().map(|(j, n)| coef(n, j + 1)).collect(),
        r_squared: if tss > 0.0 { 1.0 - rss / tss } else { 1.0 },
        rss,
        m,
        p,
    })
}

/// In-place Householder QR of a column-major `m × p` matrix. Returns the
/// upper-triangular `R` (row-major, `p × p`) and `Qᵀy`.
fn householder_qr(a: &mut [Vec<f64>], mut y: Vec<f64>) -> (Vec<Vec<f64>>, Vec<f64>) {
    let p = a.len();
    let m = y.len();
    for k in 0..p {
        let norm = a[k][k..].iter().map(|v| v * v).sum::<f64>().sqrt();
        if norm == 0.0 {
            continue;
        }
        let alpha = if a[k][k] > 0.0 { -norm } else { norm };
        let mut v: Vec<f64> = a[k][k..].to_vec();
        v[0] -= alpha;
        let vnorm2: f64 = v.iter().map(|x| x * x).sum();
        if vnorm2 == 0.0 {
            continue;
        }
        let reflect = |col: &mut [f64]| {
            let dot: f64 = v.iter().zip(col.iter()).map(|(a, b)| a * b).sum();
            let f = 2.0 * dot / vnorm2;
            col.iter_mut().zip(&v).for_each(|(c, vi)| *c -= f * vi);
        };
        for col in a.iter_mut().skip(k) {
            reflect(&mut col[k..m]);
        }
        reflect(&mut y[k..m]);
    }
    let r = (0..p)
        .map(|i| (0..p).map(|j| if j >= i { a[j][i] } else { 0.0 }).collect())
        .collect();
    (r, y)
}

fn invert_upper(r: &[Vec<f64>], p: usize) -> Vec<Vec<f64>> {
    let mut inv = vec![vec![0.0; p]; p];
    for col in 0..p {
        for i in (0..=col).rev() {
            let rhs = if i == col { 1.0 } else { 0.0 };
            let s: f64 = (i + 1..=col).map(|k| r[i][k] * inv[k][col]).sum();
            inv[i][col] = (rhs - s) / r[i][i];
        }
    }
    inv
}
