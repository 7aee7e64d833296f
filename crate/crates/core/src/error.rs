use thiserror::Error;

/// Errors raised by the channel, bound, exact and simulation routines.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("probability {value} is greater than one")]
    ProbabilityAboveOne { value: f64 },

    #[error("objective is not finite at rho = {rho}")]
    NonFiniteObjective { rho: f64 },

    #[error("path enumeration refused for n = {n} (limit {limit})")]
    TooManyPaths { n: usize, limit: usize },

    #[error("simulation budget exceeded: n * m = {cost} > {limit}")]
    BudgetExceeded { cost: u64, limit: u64 },

    #[error("chain has no unique stationary law (alpha + beta = 0)")]
    NotErgodic,
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Error {
    Error::InvalidParameter {
        name,
        reason: reason.into(),
    }
}
