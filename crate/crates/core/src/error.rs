use std::fmt;

/// Errors raised by the solvers and model constructors.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("domain error: {0}")]
    Domain(String),
    #[error("the martingale polytope is empty (the market admits arbitrage)")]
    EmptyPolytope,
    #[error("the dual solver requires a strictly concave utility")]
    StrictConcavityRequired,
    #[error("derivative undefined: {0}")]
    UndefinedDerivative(String),
    #[error("objective unbounded above: {reason}")]
    Unbounded { reason: String, direction: Vec<f64> },
    #[error("no convergence after {iterations} iterations (residual {residual:e})")]
    NotConverged { iterations: usize, residual: f64 },
    #[error("unsupported family: {0}")]
    UnsupportedFamily(String),
    #[error("precondition violated: {0}")]
    Precondition(String),
    #[error("infeasible: {0}")]
    Infeasible(String),
    #[error("unsupported asymptotics: {0}")]
    UnsupportedAsymptotics(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(msg: impl fmt::Display) -> Error {
    Error::InvalidInput(msg.to_string())
}
