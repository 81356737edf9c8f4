//! Error type shared across operators, oracles and solvers.

use crate::element::Shape;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("shape mismatch: expected {expected}, got {actual}")]
    ShapeMismatch { expected: Shape, actual: Shape },

    #[error("cannot compose: inner codomain {inner_codomain} does not match outer domain {outer_domain}")]
    CompositionMismatch { outer_domain: Shape, inner_codomain: Shape },

    #[error("{0} requires a matrix with at least 2 rows and 2 columns, got {1}")]
    MatrixRequired(&'static str, Shape),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("problem must contain at least one smooth or nonsmooth term")]
    EmptyProblem,

    #[error("starting point is infeasible for the given problem")]
    InfeasibleStart,

    #[error("step search failed at iteration {iteration}: no acceptable step after {shrinks} halvings")]
    StepSearchFailed { iteration: usize, shrinks: usize },

    #[error("no termination criterion is active")]
    NoTermination,
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Error {
        Error::InvalidConfig(msg.into())
    }
}
