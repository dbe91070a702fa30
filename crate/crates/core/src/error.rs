use alloc::string::String;

pub type Result<T> = core::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("distance must be positive, got {0} m")]
    NonPositiveDistance(f64),

    #[error("invalid measurement: arcsin argument {0} outside [-1, 1]")]
    InvalidMeasurement(f64),

    #[error("infeasible transmission: {bits} bits over a zero-rate link")]
    InfeasibleTransmission { bits: f64 },

    #[error("constraint violated: {0}")]
    ConstraintViolation(String),

    #[error("shape mismatch: expected {expected}, got {got}")]
    ShapeMismatch { expected: usize, got: usize },

    #[error("invalid config value for `{key}`: {reason}")]
    InvalidConfig { key: String, reason: String },

    #[error("invariant violated: {0}")]
    Invariant(String),

    #[error("checkpoint: {0}")]
    Checkpoint(String),
}
