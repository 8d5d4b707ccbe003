use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("grid too coarse: {0}")]
    GridTooCoarse(String),

    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("field does not match grid: expected {expected} values, got {got}")]
    FieldMismatch { expected: usize, got: usize },

    #[error("non-finite value at index {0}")]
    NonFinite(usize),

    #[error("negative value {value} at index {index}")]
    NegativeValue { index: usize, value: f64 },

    #[error("inadmissible phase field: {0}")]
    Inadmissible(String),

    #[error("mean {target} is not attainable (attainable range [0, {max}])")]
    InfeasibleMass { target: f64, max: f64 },

    #[error("operation requires equal cell weights")]
    UnequalWeights,

    #[error("invalid potential: {0}")]
    InvalidPotential(String),

    #[error("invalid coefficient family: {0}")]
    InvalidCoefficient(String),

    #[error("eigensolver did not converge after {iterations} iterations (residual {residual:e})")]
    NoConvergence { iterations: usize, residual: f64 },

    #[error("eigensolver produced a sign-indefinite eigenfunction")]
    SignIndefinite,

    #[error("restricted function space is trivial (no interior cells)")]
    TrivialSpace,

    #[error("shape is too close to the domain boundary: clearance {clearance} < required {required}")]
    ShapeTooClose { clearance: f64, required: f64 },

    #[error("unsupported: {0}")]
    Unsupported(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Error {
    Error::InvalidParameter {
        name,
        reason: reason.into(),
    }
}
