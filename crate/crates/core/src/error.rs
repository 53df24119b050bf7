use thiserror::Error;

/// Errors raised by the spectral laboratory.
#[derive(Debug, Error)]
pub enum GibqError {
    #[error("lattice mismatch: {0}")]
    LatticeMismatch(String),

    #[error("frequency {xi} exceeds lattice cutoff {cutoff}")]
    Overflow { xi: i128, cutoff: i64 },

    #[error("capacity exceeded: {what} needs {requested}, limit is {limit}")]
    Capacity {
        what: &'static str,
        requested: String,
        limit: String,
    },

    #[error("domain error: {0}")]
    Domain(String),

    #[error("trajectory mismatch: {0}")]
    TrajectoryMismatch(String),

    #[error("fixed-point iteration is not contracting (measured factor {factor:.3e} after {iterations} iterations)")]
    NotContracting { factor: f64, iterations: usize },

    #[error("fixed-point iteration did not reach tolerance {tol:.1e} within {iterations} iterations (last distance {distance:.3e})")]
    IterationCap {
        tol: f64,
        iterations: usize,
        distance: f64,
    },

    #[error("truncation tail {tail:.3e} exceeds {limit:.1e} of total energy (closure depth {depth})")]
    TruncationTail { tail: f64, limit: f64, depth: usize },

    #[error("power series diverges: ledger ratio {ratio:.3e} at generation {generation}")]
    SeriesDivergence {
        generation: usize,
        ratio: f64,
        /// Every quantity measured before the verdict.
        report: Box<crate::harness::InflationReport>,
    },

    #[error("structural error: {0}")]
    Structural(String),

    #[error("config error: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl GibqError {
    /// Whether the error stems from user configuration rather than computation.
    pub fn is_config(&self) -> bool {
        matches!(self, GibqError::Config(_) | GibqError::Json(_))
    }
}

pub type Result<T> = std::result::Result<T, GibqError>;
