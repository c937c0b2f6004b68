use thiserror::Error;

/// Errors produced by the fused-kite solvers and data loaders.
#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch in {context}: expected {expected}, got {got}")]
    DimensionMismatch {
        context: &'static str,
        expected: usize,
        got: usize,
    },

    #[error("index {index} out of range for dimension {dim}")]
    IndexOutOfRange { index: usize, dim: usize },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("malformed matrix: {0}")]
    MalformedMatrix(String),

    #[error("factorization failed: {0}")]
    Factorization(String),

    #[error("delta below attainable residual: delta = {delta}, least-squares residual = {floor}")]
    InfeasibleDelta { delta: f64, floor: f64 },

    #[error("constrained mode requires lambda1 > 0 (pure total-variation constraint has no bracket)")]
    PureTvConstrained,

    #[error("oracle input too large: dimension {dim} exceeds cap {cap}")]
    OracleCap { dim: usize, cap: usize },

    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn check_len(context: &'static str, expected: usize, got: usize) -> Result<()> {
    if expected != got {
        return Err(Error::DimensionMismatch {
            context,
            expected,
            got,
        });
    }
    Ok(())
}
