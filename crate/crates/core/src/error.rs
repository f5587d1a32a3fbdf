use thiserror::Error;

/// Errors raised by the solver library.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum CldgError {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("invalid fractional exponent {value}: {reason}")]
    InvalidExponent { value: f64, reason: &'static str },

    #[error("invalid mesh: {0}")]
    InvalidMesh(String),

    #[error("meshes do not form an overlapping pair: {0}")]
    MismatchedMeshes(String),

    #[error("singular matrix: zero pivot in column {column}")]
    SingularMatrix { column: usize },

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("invalid time controls: {0}")]
    InvalidControls(String),

    #[error("invalid problem: {0}")]
    InvalidProblem(String),

    #[error("stability violation at t = {time}: {detail}")]
    StabilityViolation { time: f64, detail: String },

    #[error("configuration error: {0}")]
    Config(String),

    #[error("I/O error: {0}")]
    Io(String),
}

impl From<std::io::Error> for CldgError {
    fn from(err: std::io::Error) -> Self {
        CldgError::Io(err.to_string())
    }
}

pub type Result<T> = std::result::Result<T, CldgError>;
