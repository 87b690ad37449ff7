use thiserror::Error;

/// Errors raised anywhere in the solver pipeline.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    Parameter(String),

    #[error("kernel evaluated at coincident points (k*r = {kr:e})")]
    SingularEvaluation { kr: f64 },

    #[error("matrix is numerically singular (smallest pivot {pivot:e}){context}")]
    Singular { pivot: f64, context: String },

    #[error("point ({x}, {y}) is within {dist:e} of the boundary; move it at least {min:e} away")]
    Proximity { x: f64, y: f64, dist: f64, min: f64 },

    #[error("dense system needs {needed} bytes, budget is {budget}")]
    MemoryBudget { needed: u64, budget: u64 },

    #[error("dimension mismatch: expected {expected}, got {got}")]
    Dimension { expected: usize, got: usize },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn param<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Parameter(msg.into()))
}
