//! Generalized-least-squares estimation of the field mean, plus the classical
//! sample variance estimators and the white-noise closed forms.
//!
//! Letting the target recede from every sample drives ρ_j to a constant
//! vector and turns the kriging weights into the GLS weights
//!
//! ```text
//! ω = Λ⁻¹F / (F′Λ⁻¹F),    ξ = 1 / (2 F′Λ⁻¹F),    MSE = 2ξσ² = σ²·ω′Λω.
//! ```
//!
//! [`gls_mean`] evaluates this with a Cholesky factor of Λ;
//! [`gls_mean_via_kriging`] solves the bordered kriging system with a zero
//! correlation head instead, giving a second route to the same numbers.

use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use crate::correlation::{coincident_pairs, correlation_matrix, CorrelationModel};
use crate::error::{KrigeError, Result};
use crate::kriging::{solve_system, KrigingSystem, SampleSet};
use crate::linalg::SpdFactor;
use crate::policy::NumericPolicy;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MeanEstimate {
    pub mean: f64,
    pub xi: f64,
    pub weights: Vec<f64>,
    /// Mean squared error of the mean estimate, 2ξσ².
    pub mse: f64,
}

pub fn gls_mean(
    model: &CorrelationModel,
    samples: &SampleSet,
    policy: &NumericPolicy,
) -> Result<MeanEstimate> {
    let lambda = correlation_matrix(model, samples.locations())?;
    let factor = SpdFactor::new(&lambda, policy).map_err(|s| KrigeError::SingularSystem {
        condition: s.condition,
        coincident: coincident_pairs(samples.locations()),
    })?;
    let ones = DVector::from_element(samples.len(), 1.0);
    let lambda_inv_f = factor.solve(&ones);
    let f_lambda_inv_f = lambda_inv_f.sum();
    if !(f_lambda_inv_f.is_finite() && f_lambda_inv_f > 0.0) {
        return Err(KrigeError::NotPositiveDefinite {
            coincident: coincident_pairs(samples.locations()),
        });
    }
    let weights: Vec<f64> = lambda_inv_f.iter().map(|x| x / f_lambda_inv_f).collect();
    let xi = 1.0 / (2.0 * f_lambda_inv_f);
    Ok(finish(weights, xi, samples, model.sigma2()))
}

/// Same estimate from the bordered system `[Λ F; F′ 0]·[ω; −2ξ] = [0; 1]`.
pub fn gls_mean_via_kriging(
    model: &CorrelationModel,
    samples: &SampleSet,
    policy: &NumericPolicy,
) -> Result<MeanEstimate> {
    let lambda = correlation_matrix(model, samples.locations())?;
    let system = KrigingSystem::from_parts(&lambda, &vec![0.0; samples.len()]);
    let solution = solve_system(&system, policy).map_err(|e| match e {
        KrigeError::SingularSystem { condition, .. } => KrigeError::SingularSystem {
            condition,
            coincident: coincident_pairs(samples.locations()),
        },
        other => other,
    })?;
    let xi = -solution.lagrange / 2.0;
    if !(xi.is_finite() && xi > 0.0) {
        return Err(KrigeError::NotPositiveDefinite {
            coincident: coincident_pairs(samples.locations()),
        });
    }
    Ok(finish(solution.weights, xi, samples, model.sigma2()))
}

fn finish(weights: Vec<f64>, xi: f64, samples: &SampleSet, sigma2: f64) -> MeanEstimate {
    let mean = weights.iter().zip(samples.values()).map(|(w, v)| w * v).sum();
    MeanEstimate {
        mean,
        xi,
        weights,
        mse: 2.0 * xi * sigma2,
    }
}

/// Largest relative discrepancy between two estimates over mean, ξ, MSE and
/// every weight. Relative to max(|a|, |b|, 1).
pub fn max_discrepancy(a: &MeanEstimate, b: &MeanEstimate) -> f64 {
    let rel = |x: f64, y: f64| (x - y).abs() / x.abs().max(y.abs()).max(1.0);
    let mut worst = rel(a.mean, b.mean).max(rel(a.xi, b.xi)).max(rel(a.mse, b.mse));
    if a.weights.len() != b.weights.len() {
        return f64::INFINITY;
    }
    for (x, y) in a.weights.iter().zip(&b.weights) {
        worst = worst.max(rel(*x, *y));
    }
    worst
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VarianceEstimate {
    pub n: usize,
    pub mean: f64,
    /// Sum of squared deviations over n.
    pub biased: f64,
    /// Sum of squared deviations over n − 1.
    pub unbiased: f64,
}

fn two_pass(values: &[f64]) -> Result<(f64, f64)> {
    if values.is_empty() {
        return Err(KrigeError::EmptySamples);
    }
    if let Some(index) = values.iter().position(|v| !v.is_finite()) {
        return Err(KrigeError::NonFiniteValue { index });
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let ss = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>();
    Ok((mean, ss))
}

/// The 1/n estimator alone; defined for a single value.
pub fn biased_variance(values: &[f64]) -> Result<f64> {
    let (_, ss) = two_pass(values)?;
    Ok(ss / values.len() as f64)
}

pub fn sample_variance(values: &[f64]) -> Result<VarianceEstimate> {
    let (mean, ss) = two_pass(values)?;
    let n = values.len();
    if n < 2 {
        return Err(KrigeError::InsufficientData { needed: 2, found: n });
    }
    Ok(VarianceEstimate {
        n,
        mean,
        biased: ss / n as f64,
        unbiased: ss / (n - 1) as f64,
    })
}

/// Closed forms for white noise with n samples and an off-sample target.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WhiteNoiseReport {
    pub n: usize,
    pub kriging_variance: f64,
    pub estimator_variance: f64,
    pub lagrange: f64,
    pub gls_mse: f64,
}

pub fn white_noise_report(n: usize, sigma2: f64) -> Result<WhiteNoiseReport> {
    if n == 0 {
        return Err(KrigeError::InsufficientData { needed: 1, found: 0 });
    }
    if !(sigma2.is_finite() && sigma2 > 0.0) {
        return Err(KrigeError::InvalidModel {
            param: "sigma2",
            reason: format!("must be finite and > 0, got {sigma2}"),
        });
    }
    let inv = 1.0 / n as f64;
    Ok(WhiteNoiseReport {
        n,
        kriging_variance: sigma2 * (1.0 + inv),
        estimator_variance: sigma2 * inv,
        lagrange: -inv,
        gls_mse: sigma2 * inv,
    })
}
