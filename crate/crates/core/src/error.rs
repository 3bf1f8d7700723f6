use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("parse error at line {line}, column {column}: {message}")]
    Parse {
        line: usize,
        column: usize,
        message: String,
    },
    #[error("invalid mesh: {0}")]
    Mesh(String),
    #[error("invalid coefficients: {0}")]
    Coefficients(String),
    #[error("boundary mode mismatch: {0}")]
    ModeMismatch(String),
    #[error("dimension mismatch: expected {expected}, got {actual}")]
    Dimension { expected: usize, actual: usize },
    #[error("singular matrix: zero pivot at row {row}")]
    Singular { row: usize },
    #[error("linear solve failed at time step {step}: {source}")]
    StepSolve {
        step: usize,
        #[source]
        source: Box<Error>,
    },
    #[error("no convergence after {iterations} iterations (last residual {residual:e})")]
    NoConvergence { iterations: usize, residual: f64 },
    #[error("shift adjustment failed: {0}")]
    Shift(String),
    #[error("problem size {size} exceeds the dense solver cap {cap}")]
    DimensionCap { size: usize, cap: usize },
    #[error("invalid input: {0}")]
    Invalid(String),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::Invalid(msg.into())
    }
}
