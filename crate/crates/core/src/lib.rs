//! Ordinary kriging with explicit variance bookkeeping.
//!
//! The crate solves the bordered ordinary-kriging system for weights and a
//! Lagrange multiplier, reports the prediction error variance and the
//! variance of the predictor itself (each computed two independent ways),
//! estimates the field mean by generalized least squares, and verifies all
//! of it by seeded Monte Carlo simulation.
//!
//! ```
//! use krige::{predict, CorrelationModel, Location, NumericPolicy, SampleSet};
//!
//! let model = CorrelationModel::white_noise(1.0)?;
//! let samples = SampleSet::new(
//!     (0..4).map(|i| Location::new(vec![i as f64])).collect::<Result<_, _>>()?,
//!     vec![1.0, 2.0, 3.0, 6.0],
//! )?;
//! let p = predict(&model, &samples, &Location::new(vec![10.0])?, &NumericPolicy::default())?;
//! assert!((p.estimate - 3.0).abs() < 1e-12);
//! assert!((p.kriging_variance - 1.25).abs() < 1e-12);
//! # Ok::<(), krige::KrigeError>(())
//! ```

pub mod correlation;
pub mod error;
pub mod kriging;
mod linalg;
pub mod mc;
pub mod mean;
pub mod policy;

pub use correlation::{correlation, correlation_matrix, CorrelationKind, CorrelationModel, Location};
pub use error::{KrigeError, Result};
pub use kriging::{
    build_system, cross_validate, predict, predict_full, solve_system, variance_forms,
    CrossValidation, KrigingSolution, KrigingSystem, Prediction, SampleSet, VarianceForms,
};
pub use mc::{
    simulate_field, verify_asymptotics, verify_prediction_variance, AsymptoticsReport, Layout,
    LayoutKind, McReport, SimulationConfig,
};
pub use mean::{
    biased_variance, gls_mean, gls_mean_via_kriging, sample_variance, white_noise_report,
    MeanEstimate, VarianceEstimate, WhiteNoiseReport,
};
pub use policy::NumericPolicy;
