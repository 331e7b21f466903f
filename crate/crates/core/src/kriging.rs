//! Ordinary kriging: the bordered system, its solution, and point predictions.
//!
//! For samples at locations x₁…xₙ and a target x_j the weights ω and the
//! Lagrange multiplier μ solve
//!
//! ```text
//! ┌ Λ   F ┐ ┌ ω ┐   ┌ ρ_j ┐
//! └ F′  0 ┘ └ μ ┘ = └  1  ┘
//! ```
//!
//! where Λ is the sample correlation matrix, ρ_j the sample-to-target
//! correlations and F a vector of ones. Two variances follow from the
//! solution, each computable in two algebraically equal ways:
//!
//! * prediction error variance `σ²(1 − ω′ρ_j − μ) = σ²(1 − 2ω′ρ_j + ω′Λω)`
//! * estimator variance `σ²(ω′ρ_j − μ) = σ²·ω′Λω`
//!
//! [`predict`] evaluates both forms and fails if they disagree.

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::correlation::{check_same_dim, correlation_matrix, CorrelationModel, Location};
use crate::error::{KrigeError, Result};
use crate::linalg::solve_pivoted;
use crate::policy::NumericPolicy;

/// Observed values at sample locations.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampleSet {
    locations: Vec<Location>,
    values: Vec<f64>,
}

impl SampleSet {
    pub fn new(locations: Vec<Location>, values: Vec<f64>) -> Result<Self> {
        if locations.len() != values.len() {
            return Err(KrigeError::LengthMismatch {
                locations: locations.len(),
                values: values.len(),
            });
        }
        if locations.is_empty() {
            return Err(KrigeError::EmptySamples);
        }
        check_same_dim(&locations)?;
        if let Some(index) = values.iter().position(|v| !v.is_finite()) {
            return Err(KrigeError::NonFiniteValue { index });
        }
        Ok(Self { locations, values })
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.locations[0].dim()
    }

    pub fn locations(&self) -> &[Location] {
        &self.locations
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Same locations, new values.
    pub fn with_values(&self, values: Vec<f64>) -> Result<Self> {
        Self::new(self.locations.clone(), values)
    }

    /// The set with sample `index` removed.
    pub fn without(&self, index: usize) -> Result<Self> {
        fn keep<T: Clone>(v: &[T], index: usize) -> Vec<T> {
            v.iter()
                .enumerate()
                .filter(|(i, _)| *i != index)
                .map(|(_, x)| x.clone())
                .collect()
        }
        Self::new(keep(&self.locations, index), keep(&self.values, index))
    }

    fn check_target(&self, target: &Location) -> Result<()> {
        if target.dim() != self.dim() {
            return Err(KrigeError::DimensionMismatch {
                expected: self.dim(),
                found: target.dim(),
            });
        }
        Ok(())
    }
}

/// The (n+1)×(n+1) bordered matrix and its right-hand side.
#[derive(Debug, Clone, PartialEq)]
pub struct KrigingSystem {
    augmented: DMatrix<f64>,
    rhs: DVector<f64>,
}

impl KrigingSystem {
    /// Border a correlation matrix with ones and a zero corner.
    pub(crate) fn from_parts(lambda: &DMatrix<f64>, rho: &[f64]) -> Self {
        let n = lambda.nrows();
        let mut augmented = DMatrix::from_element(n + 1, n + 1, 1.0);
        augmented.view_mut((0, 0), (n, n)).copy_from(lambda);
        augmented[(n, n)] = 0.0;
        let mut rhs = DVector::from_element(n + 1, 1.0);
        rhs.rows_mut(0, n).copy_from_slice(rho);
        Self { augmented, rhs }
    }

    pub fn n(&self) -> usize {
        self.rhs.len() - 1
    }

    pub fn augmented(&self) -> &DMatrix<f64> {
        &self.augmented
    }

    pub fn rhs(&self) -> &DVector<f64> {
        &self.rhs
    }

    /// Λ, the leading n×n block.
    pub fn lambda(&self) -> DMatrix<f64> {
        let n = self.n();
        self.augmented.view((0, 0), (n, n)).into_owned()
    }

    /// ρ_j, the leading n entries of the right-hand side.
    pub fn target_correlations(&self) -> &[f64] {
        &self.rhs.as_slice()[..self.n()]
    }

    fn identical_rows(&self) -> Vec<(usize, usize)> {
        let n = self.n();
        let mut out = Vec::new();
        for i in 0..n {
            for l in (i + 1)..n {
                if self.augmented.row(i) == self.augmented.row(l) {
                    out.push((i, l));
                }
            }
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KrigingSolution {
    pub weights: Vec<f64>,
    pub lagrange: f64,
}

impl KrigingSolution {
    pub fn weight_sum(&self) -> f64 {
        self.weights.iter().sum()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Prediction {
    pub estimate: f64,
    /// E{(V_j − V̂_j)²}, the prediction error variance.
    pub kriging_variance: f64,
    /// E{(V̂_j − m)²}, the variance of the predictor itself.
    pub estimator_variance: f64,
    pub field_variance: f64,
}

/// Both algebraic forms of both variances, unclamped.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VarianceForms {
    pub kriging_lagrange: f64,
    pub kriging_quadratic: f64,
    pub estimator_lagrange: f64,
    pub estimator_quadratic: f64,
}

pub fn build_system(
    model: &CorrelationModel,
    samples: &SampleSet,
    target: &Location,
) -> Result<KrigingSystem> {
    samples.check_target(target)?;
    let lambda = correlation_matrix(model, samples.locations())?;
    let rho: Vec<f64> = samples
        .locations()
        .iter()
        .map(|loc| model.at_distance(loc.distance_unchecked(target)))
        .collect();
    Ok(KrigingSystem::from_parts(&lambda, &rho))
}

pub fn solve_system(system: &KrigingSystem, policy: &NumericPolicy) -> Result<KrigingSolution> {
    let n = system.n();
    let x = solve_pivoted(system.augmented(), system.rhs(), policy).map_err(|s| {
        KrigeError::SingularSystem {
            condition: s.condition,
            coincident: system.identical_rows(),
        }
    })?;
    let solution = KrigingSolution {
        weights: x.as_slice()[..n].to_vec(),
        lagrange: x[n],
    };
    if (solution.weight_sum() - 1.0).abs() > policy.weight_sum_tolerance {
        return Err(KrigeError::SingularSystem {
            condition: f64::NAN,
            coincident: system.identical_rows(),
        });
    }
    Ok(solution)
}

pub fn variance_forms(
    system: &KrigingSystem,
    solution: &KrigingSolution,
    sigma2: f64,
) -> VarianceForms {
    let w = DVector::from_column_slice(&solution.weights);
    let rho = DVector::from_column_slice(system.target_correlations());
    let n = system.n();
    let lambda = system.augmented.view((0, 0), (n, n));
    let w_rho = w.dot(&rho);
    let w_lambda_w = (lambda * &w).dot(&w);
    let mu = solution.lagrange;
    VarianceForms {
        kriging_lagrange: sigma2 * (1.0 - (w_rho + mu)),
        kriging_quadratic: sigma2 * (1.0 - 2.0 * w_rho + w_lambda_w),
        estimator_lagrange: sigma2 * (w_rho - mu),
        estimator_quadratic: sigma2 * w_lambda_w,
    }
}

/// Solve at `target` and return the solution together with the prediction.
pub fn predict_full(
    model: &CorrelationModel,
    samples: &SampleSet,
    target: &Location,
    policy: &NumericPolicy,
) -> Result<(KrigingSolution, Prediction)> {
    let system = build_system(model, samples, target)?;
    let solution = solve_system(&system, policy)?;
    let prediction = prediction_from(&system, &solution, samples.values(), model.sigma2(), policy)?;
    Ok((solution, prediction))
}

pub(crate) fn prediction_from(
    system: &KrigingSystem,
    solution: &KrigingSolution,
    values: &[f64],
    sigma2: f64,
    policy: &NumericPolicy,
) -> Result<Prediction> {
    let forms = variance_forms(system, solution, sigma2);
    for (lagrange, quadratic) in [
        (forms.kriging_lagrange, forms.kriging_quadratic),
        (forms.estimator_lagrange, forms.estimator_quadratic),
    ] {
        if !policy.forms_agree(lagrange, quadratic, sigma2) {
            return Err(KrigeError::InconsistentVariance {
                lagrange,
                quadratic,
            });
        }
    }
    let estimate = solution
        .weights
        .iter()
        .zip(values)
        .map(|(w, v)| w * v)
        .sum();
    Ok(Prediction {
        estimate,
        kriging_variance: policy.clamp_variance("kriging variance", forms.kriging_lagrange, sigma2)?,
        estimator_variance: policy.clamp_variance(
            "estimator variance",
            forms.estimator_lagrange,
            sigma2,
        )?,
        field_variance: sigma2,
    })
}

pub fn predict(
    model: &CorrelationModel,
    samples: &SampleSet,
    target: &Location,
    policy: &NumericPolicy,
) -> Result<Prediction> {
    predict_full(model, samples, target, policy).map(|(_, p)| p)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Fold {
    pub held_out_index: usize,
    pub prediction: Prediction,
    pub actual: f64,
}

impl Fold {
    pub fn residual(&self) -> f64 {
        self.actual - self.prediction.estimate
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SkippedFold {
    pub held_out_index: usize,
    pub reason: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CrossValidationSummary {
    pub mean_squared_residual: f64,
    pub mean_kriging_variance: f64,
    /// mean_squared_residual / mean_kriging_variance; NaN when undefined.
    pub ratio: f64,
    pub folds: usize,
    pub skipped: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CrossValidation {
    pub folds: Vec<Fold>,
    pub skipped: Vec<SkippedFold>,
    pub summary: CrossValidationSummary,
}

/// Leave-one-out validation. Folds run in parallel; output is ordered by
/// held-out index. Folds whose reduced system is singular are skipped and
/// recorded rather than failing the whole run.
pub fn cross_validate(
    model: &CorrelationModel,
    samples: &SampleSet,
    policy: &NumericPolicy,
) -> Result<CrossValidation> {
    if samples.len() < 2 {
        return Err(KrigeError::InsufficientData {
            needed: 2,
            found: samples.len(),
        });
    }
    let outcomes: Vec<(usize, Result<Prediction>)> = (0..samples.len())
        .into_par_iter()
        .map(|i| {
            let result = samples
                .without(i)
                .and_then(|rest| predict(model, &rest, &samples.locations()[i], policy));
            (i, result)
        })
        .collect();

    let mut folds = Vec::new();
    let mut skipped = Vec::new();
    for (i, outcome) in outcomes {
        match outcome {
            Ok(prediction) => folds.push(Fold {
                held_out_index: i,
                prediction,
                actual: samples.values()[i],
            }),
            Err(e @ KrigeError::SingularSystem { .. }) => skipped.push(SkippedFold {
                held_out_index: i,
                reason: e.to_string(),
            }),
            Err(e) => return Err(e),
        }
    }

    let count = folds.len() as f64;
    let (msr, mkv) = if folds.is_empty() {
        (f64::NAN, f64::NAN)
    } else {
        (
            folds.iter().map(|f| f.residual().powi(2)).sum::<f64>() / count,
            folds.iter().map(|f| f.prediction.kriging_variance).sum::<f64>() / count,
        )
    };
    let ratio = if mkv > 0.0 { msr / mkv } else { f64::NAN };
    let summary = CrossValidationSummary {
        mean_squared_residual: msr,
        mean_kriging_variance: mkv,
        ratio,
        folds: folds.len(),
        skipped: skipped.len(),
    };
    Ok(CrossValidation {
        folds,
        skipped,
        summary,
    })
}
