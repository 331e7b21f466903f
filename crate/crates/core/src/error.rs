use thiserror::Error;

pub type Result<T> = std::result::Result<T, KrigeError>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum KrigeError {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("location dimension {0} is outside 1..=3")]
    UnsupportedDimension(usize),

    #[error("non-finite coordinate at axis {axis}")]
    NonFiniteCoordinate { axis: usize },

    #[error("non-finite value at sample {index}")]
    NonFiniteValue { index: usize },

    #[error("invalid model parameter `{param}`: {reason}")]
    InvalidModel { param: &'static str, reason: String },

    #[error("sample set is empty")]
    EmptySamples,

    #[error("{locations} locations but {values} values")]
    LengthMismatch { locations: usize, values: usize },

    #[error("need at least {needed} samples, found {found}")]
    InsufficientData { needed: usize, found: usize },

    /// The system matrix is singular or too badly conditioned to trust.
    /// `coincident` lists index pairs of sample locations at zero distance,
    /// the usual cause.
    #[error("singular system (condition estimate {condition:e}){}", coincident_hint(.coincident))]
    SingularSystem {
        condition: f64,
        coincident: Vec<(usize, usize)>,
    },

    #[error("correlation matrix is not positive definite{}", coincident_hint(.coincident))]
    NotPositiveDefinite { coincident: Vec<(usize, usize)> },

    #[error("variance forms disagree: lagrange form {lagrange}, quadratic form {quadratic}")]
    InconsistentVariance { lagrange: f64, quadratic: f64 },

    #[error("negative {quantity} {value} beyond round-off")]
    NegativeVariance { quantity: &'static str, value: f64 },

    #[error("simulation needs {draws} draws, budget is {budget}")]
    BudgetExceeded { draws: u128, budget: u64 },

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("data error: {0}")]
    Data(String),
}

fn coincident_hint(pairs: &[(usize, usize)]) -> String {
    if pairs.is_empty() {
        return String::new();
    }
    let list = pairs
        .iter()
        .take(5)
        .map(|(a, b)| format!("{a}&{b}"))
        .collect::<Vec<_>>()
        .join(", ");
    format!("; coincident sample locations: {list}")
}

impl KrigeError {
    /// True for failures of the numerics (singular or inconsistent systems),
    /// false for bad input or configuration.
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            KrigeError::SingularSystem { .. }
                | KrigeError::NotPositiveDefinite { .. }
                | KrigeError::InconsistentVariance { .. }
                | KrigeError::NegativeVariance { .. }
        )
    }

    /// Stable machine-readable tag.
    pub fn kind(&self) -> &'static str {
        match self {
            KrigeError::DimensionMismatch { .. } => "dimension_mismatch",
            KrigeError::UnsupportedDimension(_) => "unsupported_dimension",
            KrigeError::NonFiniteCoordinate { .. } => "non_finite_coordinate",
            KrigeError::NonFiniteValue { .. } => "non_finite_value",
            KrigeError::InvalidModel { .. } => "invalid_model",
            KrigeError::EmptySamples => "empty_samples",
            KrigeError::LengthMismatch { .. } => "length_mismatch",
            KrigeError::InsufficientData { .. } => "insufficient_data",
            KrigeError::SingularSystem { .. } => "singular_system",
            KrigeError::NotPositiveDefinite { .. } => "not_positive_definite",
            KrigeError::InconsistentVariance { .. } => "inconsistent_variance",
            KrigeError::NegativeVariance { .. } => "negative_variance",
            KrigeError::BudgetExceeded { .. } => "budget_exceeded",
            KrigeError::InvalidConfig(_) => "invalid_config",
            KrigeError::Data(_) => "data",
        }
    }
}
