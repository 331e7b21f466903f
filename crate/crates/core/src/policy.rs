//! Numeric tolerances shared by every solver in the crate.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{KrigeError, Result};

/// Tolerances and thresholds. Every field has a default; a JSON file may
/// override any subset of them.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct NumericPolicy {
    /// Largest accepted 1-norm condition estimate of a system matrix.
    pub condition_threshold: f64,
    /// Allowed |Σω − 1|.
    pub weight_sum_tolerance: f64,
    /// Residual bound: ‖Ax − b‖∞ ≤ tol·(1 + ‖b‖∞).
    pub residual_tolerance: f64,
    /// Relative agreement required between the Lagrange-form and
    /// quadratic-form variances (relative to max(|a|, |b|, σ²)).
    pub formula_tolerance: f64,
    /// Negative variances down to −tol·σ² are clamped to zero.
    pub negative_variance_tolerance: f64,
}

impl Default for NumericPolicy {
    fn default() -> Self {
        Self {
            condition_threshold: 1e12,
            weight_sum_tolerance: 1e-10,
            residual_tolerance: 1e-9,
            formula_tolerance: 1e-8,
            negative_variance_tolerance: 1e-9,
        }
    }
}

impl NumericPolicy {
    pub fn from_json_str(s: &str) -> Result<Self> {
        let policy: Self = serde_json::from_str(s)
            .map_err(|e| KrigeError::InvalidConfig(format!("numeric policy: {e}")))?;
        policy.validate()?;
        Ok(policy)
    }

    pub fn from_json_file(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| {
            KrigeError::InvalidConfig(format!("numeric policy {}: {e}", path.display()))
        })?;
        Self::from_json_str(&text)
    }

    pub fn validate(&self) -> Result<()> {
        let fields = [
            ("condition_threshold", self.condition_threshold),
            ("weight_sum_tolerance", self.weight_sum_tolerance),
            ("residual_tolerance", self.residual_tolerance),
            ("formula_tolerance", self.formula_tolerance),
            ("negative_variance_tolerance", self.negative_variance_tolerance),
        ];
        for (name, v) in fields {
            if !(v.is_finite() && v > 0.0) {
                return Err(KrigeError::InvalidConfig(format!(
                    "numeric policy field `{name}` must be finite and positive, got {v}"
                )));
            }
        }
        Ok(())
    }

    /// Clamp round-off negatives to zero; reject anything more negative.
    pub(crate) fn clamp_variance(
        &self,
        quantity: &'static str,
        value: f64,
        sigma2: f64,
    ) -> Result<f64> {
        if value >= 0.0 {
            Ok(value)
        } else if value > -self.negative_variance_tolerance * sigma2 {
            Ok(0.0)
        } else {
            Err(KrigeError::NegativeVariance { quantity, value })
        }
    }

    pub(crate) fn forms_agree(&self, a: f64, b: f64, sigma2: f64) -> bool {
        let scale = a.abs().max(b.abs()).max(sigma2);
        (a - b).abs() <= self.formula_tolerance * scale
    }
}
