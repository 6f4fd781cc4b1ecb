use thiserror::Error;

/// Errors raised by body construction and the geometric kernels.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum GeomError {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("origin is not an interior point of the body")]
    OriginNotInterior,

    #[error("body is degenerate (empty interior or lower-dimensional)")]
    Degenerate,

    #[error("halfspace description is unbounded")]
    Unbounded,

    #[error("infeasible constraint system")]
    Infeasible,

    #[error("matrix is singular")]
    SingularMatrix,

    #[error("unsupported representation: {0}")]
    UnsupportedRepresentation(String),

    #[error("dimension {n} exceeds the exact-computation cap {cap}")]
    DimensionCap { n: usize, cap: usize },

    #[error("section is empty or degenerate")]
    EmptySection,

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("invariant violated: {0}")]
    InvariantViolation(String),

    #[error("no convergence after {iterations} iterations (residual {residual:e})")]
    NoConvergence { iterations: usize, residual: f64, best: Vec<f64> },

    #[error("inconclusive estimate: zero hits in {samples} samples (upper 95% bound {upper_bound:e})")]
    Inconclusive { samples: usize, upper_bound: f64 },

    #[error("covering budget exhausted: {centers} centers cover {coverage:.3} of the cloud")]
    PartialNet { centers: usize, coverage: f64 },

    #[error("position precondition not met: {0}")]
    Position(String),

    #[error("json: {0}")]
    Json(String),
}

pub type Result<T> = std::result::Result<T, GeomError>;

impl From<serde_json::Error> for GeomError {
    fn from(e: serde_json::Error) -> Self {
        GeomError::Json(e.to_string())
    }
}
