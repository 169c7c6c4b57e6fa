use thiserror::Error;

/// Errors raised by the simulation layers.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("grid mismatch: {0}")]
    GridMismatch(String),
    #[error("invalid grid: {0}")]
    InvalidGrid(String),
    #[error("insufficient resolution: {0}")]
    Resolution(String),
    #[error("cannot normalize a zero-norm wavefunction")]
    ZeroNorm,
    #[error("numerical blow-up: {0}")]
    NumericalBlowup(String),
    #[error("norm violation: {0}")]
    NormViolation(String),
    #[error("domain error: {0}")]
    Domain(String),
    #[error("time {t} outside trajectory range [{start}, {end}]")]
    TimeOutOfRange { t: f64, start: f64, end: f64 },
    #[error("underdetermined fringe fit: {0}")]
    UnderdeterminedFit(String),
    #[error("diffeomorphism is not invertible: {0}")]
    NonInvertibleDiffeo(String),
    #[error("support violation: {0}")]
    SupportViolation(String),
    #[error("insufficient displacement: {0}")]
    InsufficientDisplacement(String),
    #[error("degenerate form: condition number {condition_number:e} exceeds {limit:e}")]
    DegenerateForm { condition_number: f64, limit: f64 },
    #[error("invalid projector-valued measure: {0}")]
    InvalidMeasure(String),
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("metric signature error at point {index}: {reason}")]
    Signature { index: usize, reason: String },
}

pub type Result<T> = std::result::Result<T, Error>;
