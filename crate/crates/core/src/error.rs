//! Error type shared by the analytic, oracle and simulation layers.

/// Errors produced by parameter validation and numerical verification.
#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum Error {
    /// A parameter lies outside its admissible range; the message names the
    /// violated constraint.
    #[error("parameter domain violation: {0}")]
    ParameterDomain(String),
    /// The requested model has no closed form in this crate (e.g. three or
    /// more servers in the analytic layer).
    #[error("unsupported model: {0}")]
    UnsupportedModel(String),
    /// A truncation or convergence check failed to reach its stated tolerance.
    #[error("tolerance not met: {0}")]
    ToleranceNotMet(String),
    /// A numerical routine failed in a way that valid inputs should never
    /// trigger (e.g. a singular linear solve).
    #[error("internal error: {0}")]
    Internal(String),
}

pub type Result<T> = std::result::Result<T, Error>;
