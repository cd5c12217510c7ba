use thiserror::Error;

/// Errors raised by instance handling, evaluation and solving.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum SnlError {
    #[error("invalid generator config: {0}")]
    InvalidConfig(String),

    #[error("invalid instance: {0}")]
    InvalidInstance(String),

    #[error("schema error: {0}")]
    Schema(String),

    #[error("unsupported schema version `{0}`")]
    UnknownSchemaVersion(String),

    #[error("size mismatch: expected {expected}, got {actual} ({what})")]
    SizeMismatch {
        what: &'static str,
        expected: usize,
        actual: usize,
    },

    #[error("matrix contains non-finite entries")]
    NonFinite,

    #[error("dual Hessian matrix G is singular (smallest eigenvalue estimate {margin:e})")]
    Singular { margin: f64 },

    #[error("no strictly feasible dual start: sensor {sensor} has no path to an anchor")]
    NoInteriorStart { sensor: usize },

    #[error("invalid solver config: {0}")]
    InvalidSolverConfig(String),

    #[error("pole of the scalar dual at sigma = 0")]
    Pole,
}

pub type Result<T> = std::result::Result<T, SnlError>;
