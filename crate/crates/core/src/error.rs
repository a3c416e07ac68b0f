use thiserror::Error;

/// Errors raised by the numerical modules.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// An argument lies outside the domain of the operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// A configuration field is missing or inconsistent.
    #[error("invalid configuration `{field}`: {reason}")]
    Config { field: String, reason: String },

    /// A data invariant does not hold.
    #[error("invariant violated: {0}")]
    Invariant(String),

    /// A quadrature or extrapolation did not reach the requested accuracy.
    #[error("{context}: tolerance not reached (estimate {estimate:e}, error bound {error_bound:e})")]
    Tolerance {
        context: String,
        estimate: f64,
        error_bound: f64,
    },

    /// An explicit time step produced values outside the admissible range.
    #[error("unstable step at t = {time}: u = {value} at x = {x}; reduce dt")]
    Stability { time: f64, x: f64, value: f64 },

    /// A resource budget (grid nodes, quadrature intervals) was exhausted.
    #[error("resource budget exceeded: {0}")]
    Resource(String),

    /// A branch of the construction that is not available for these parameters.
    #[error("unsupported: {0}")]
    Unsupported(String),
}

impl Error {
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    pub(crate) fn config(field: impl Into<String>, reason: impl Into<String>) -> Self {
        Error::Config {
            field: field.into(),
            reason: reason.into(),
        }
    }

    pub(crate) fn invariant(msg: impl Into<String>) -> Self {
        Error::Invariant(msg.into())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
