use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("singular evaluation: order-{order} derivative diverges at x = {x}")]
    Singularity { x: f64, order: u8 },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("grid overflow: floor(n t) = {needed} exceeds the {available} available increments")]
    GridOverflow { needed: usize, available: usize },

    #[error("function is not centered (E[f(Z)] = {mean:e}); subtract the mean before expanding")]
    NonCentered { mean: f64 },

    #[error("theorem gate violated: {0}")]
    Gate(String),

    #[error("under-replicated experiment: M = {0} < 100")]
    UnderReplication(usize),

    #[error("factorization failed: {0}")]
    Factorization(String),

    #[error("series certificate not met: {0}")]
    Certificate(String),

    #[error("usage error: {0}")]
    Usage(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// Process exit code: 2 usage/domain, 3 theorem gate, 4 numerical failure.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Gate(_) => 3,
            Error::Factorization(_) | Error::Certificate(_) => 4,
            _ => 2,
        }
    }
}
