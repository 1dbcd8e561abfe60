//! Error types shared across the crate.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    /// An argument fell outside the domain of an operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// Adaptive quadrature ran out of its subdivision budget. Carries the best
    /// estimate and the error bound attained so far.
    #[error("quadrature budget exceeded: best estimate {best} ± {err}")]
    BudgetExceeded { best: f64, err: f64 },

    /// The integral defining the operator diverges ((P1) fails or a witness of
    /// nonconvexity on the k-plane makes the infimum -∞).
    #[error("divergent integral: {0}")]
    Divergent(String),

    /// An evaluation route was asked to run outside its hypotheses
    /// (e.g. the rearranged route on a Case 2 input).
    #[error("route not applicable: {0}")]
    RouteNotApplicable(String),

    /// Ryff map construction on inputs violating the limit hypothesis.
    #[error("Ryff hypothesis violated: {0}")]
    RyffNotApplicable(String),

    /// Linear solver failed to reach the requested residual.
    #[error("linear solve failed: residual {residual} after {iters} iterations")]
    SolverFailed { residual: f64, iters: usize },

    /// Fixed-point iteration left the barrier bracket beyond tolerance.
    #[error("iteration unstable: {0}")]
    Unstable(String),

    /// Configuration did not validate against the schema.
    #[error("config error: {0}")]
    Config(String),

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }
}
