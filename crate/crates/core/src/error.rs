use alloc::string::String;

/// Errors raised by the pricing kernels.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    /// An argument is outside the domain of the operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// A linear system had a pivot (or self-loop complement) too small to divide by.
    #[error("singular system: pivot magnitude {pivot:e} below {threshold:e}")]
    Singular { pivot: f64, threshold: f64 },

    /// A numeric routine produced or consumed a non-finite value.
    #[error("non-finite value: {0}")]
    NonFinite(String),

    /// A Monte-Carlo replication did not absorb within the step bound.
    #[error("chain did not absorb within {steps} steps")]
    Divergence { steps: u64 },
}

pub type Result<T, E = Error> = core::result::Result<T, E>;

pub(crate) fn domain(msg: impl Into<String>) -> Error {
    Error::Domain(msg.into())
}
