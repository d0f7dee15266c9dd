use thiserror::Error;

/// Errors raised by the geometry kernels, the solvers and the file readers.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid curve: {0}")]
    InvalidCurve(String),

    #[error("resolution too coarse: {0}")]
    Resolution(String),

    #[error("argument outside domain: {0}")]
    Domain(String),

    #[error("no sign change in bracket [{lo}, {hi}]: {what}")]
    Bracketing { what: String, lo: f64, hi: f64 },

    #[error("infeasible configuration: {0}")]
    InfeasibleConfig(String),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("insufficient data: {0}")]
    InsufficientData(String),

    /// The curve left the graph regime `alpha^2 < 1` over the cylindrical angle.
    #[error("left the graph regime: {0}")]
    Regime(String),

    #[error("solver did not converge: {0}")]
    NonConvergence(String),

    /// Two evaluations of the same quantity disagree beyond tolerance.
    #[error("inconsistent evaluations: {0}")]
    Consistency(String),

    #[error("malformed input: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
