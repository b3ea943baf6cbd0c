use thiserror::Error;

/// Errors raised by the library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// The capacity solver hit its iteration cap. The best iterate found so
    /// far is carried along with its optimality diagnostics.
    #[error("solver did not converge after {iterations} iterations (kkt violation {kkt_max_violation:.3e} bits)")]
    ConvergenceFailure {
        iterations: usize,
        kkt_max_violation: f64,
        best: Box<crate::cad::CapacitySolution>,
    },

    #[error("no crossover: rate difference has the same sign at {lo} and {hi}")]
    NoCrossover { lo: f64, hi: f64 },

    #[error("target out of range: {0}")]
    OutOfRange(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::InvalidArgument(msg.into()))
}
