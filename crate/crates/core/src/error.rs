use thiserror::Error;

/// Errors reported by the throughput models, solvers and dynamics.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("strategy {0:?} is not a threshold strategy")]
    NotThreshold(Vec<f64>),

    #[error("demand of node {node} cannot be met even when transmitting in every slot")]
    Infeasible { node: usize },

    #[error("demand vector is outside the feasible region: {0}")]
    InfeasibleDemands(String),

    #[error("no convergence after {iterations} iterations (residual {residual:e})")]
    NonConvergence { iterations: usize, residual: f64 },

    #[error("quadrature did not reach tolerance {tolerance:e} (error estimate {estimate:e})")]
    Quadrature { tolerance: f64, estimate: f64 },
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidParameter(msg.into())
    }

    /// True for both flavours of infeasibility.
    pub fn is_infeasible(&self) -> bool {
        matches!(self, Error::Infeasible { .. } | Error::InfeasibleDemands(_))
    }
}

pub type Result<T> = std::result::Result<T, Error>;
