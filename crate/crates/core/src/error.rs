use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// Invalid input: wrong shape, kind, range or count.
    #[error("invalid argument: {0}")]
    Argument(String),

    /// Operation not possible in the current state (e.g. empty database).
    #[error("invalid state: {0}")]
    State(String),

    /// Numerical failure such as a matrix that is not positive definite.
    #[error("numeric error: {0}")]
    Numeric(String),

    /// Lighting constraints cannot be met even with every light fully on.
    #[error("infeasible lighting constraints at grid indices {violated:?}")]
    Infeasible { violated: Vec<usize> },

    /// Every particle received zero likelihood. The per-grid log-likelihood
    /// map that caused it is attached for diagnosis.
    #[error("degenerate particle update: all likelihoods are zero")]
    DegenerateUpdate { log_likelihood: Vec<f64> },

    #[error("serialization error: {0}")]
    Serde(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn arg(msg: impl Into<String>) -> Self {
        Error::Argument(msg.into())
    }
}
