use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("Radau IIA Newton iteration did not converge in {iterations} iterations (residual {residual:.3e})")]
    Integration { iterations: usize, residual: f64 },

    #[error("QP is infeasible; violated constraints {violated:?}")]
    QpInfeasible { violated: Vec<usize> },

    #[error("QP active-set iteration limit of {0} exceeded")]
    QpIterationLimit(usize),

    #[error("matrix is not positive definite after regularization")]
    NotPositiveDefinite,

    #[error("Riccati iteration did not converge in {0} iterations")]
    RiccatiNoConvergence(usize),

    #[error("controller protocol violation: {0}")]
    Protocol(&'static str),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn config(msg: impl Into<String>) -> Self {
        Error::Config(msg.into())
    }
}
