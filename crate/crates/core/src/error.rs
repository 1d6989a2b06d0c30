use thiserror::Error;

/// Errors raised by the analytic, numeric and simulation layers.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("numeric failure: {0}")]
    NumericFailure(String),

    /// Effective power margin of some message is not positive, so the
    /// joint SIC event can never occur.
    #[error("infeasible allocation: effective margin of UE{rank} is {margin}")]
    InfeasibleAllocation { rank: usize, margin: f64 },

    #[error("invalid moments: m1 = {m1}, m2 = {m2}")]
    InvalidMoments { m1: f64, m2: f64 },

    #[error("no allocation reaches the minimum rate {tmr}")]
    InfeasibleTmr { tmr: f64 },
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn domain(msg: impl Into<String>) -> Error {
    Error::Domain(msg.into())
}

pub(crate) fn numeric(msg: impl Into<String>) -> Error {
    Error::NumericFailure(msg.into())
}
