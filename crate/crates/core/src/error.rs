use thiserror::Error;

/// Errors produced by the peeling toolkit.
#[derive(Debug, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("overflow: {0}")]
    Overflow(String),

    #[error("parameter estimation failed: {0}")]
    Estimation(String),

    #[error("solver did not converge: {0}")]
    Convergence(String),

    #[error("wrong regime: {0}")]
    Regime(String),

    #[error("iteration safeguard of {0} steps exceeded before the stopping rule fired")]
    IterationLimit(usize),

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("config line {line}: {msg}")]
    Config { line: usize, msg: String },

    #[error("replication with seed {seed} failed: {source}")]
    Replication {
        seed: u64,
        #[source]
        source: Box<Error>,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn domain<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Domain(msg.into()))
}
