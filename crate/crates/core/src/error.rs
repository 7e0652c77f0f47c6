use alloc::string::String;

/// Errors raised by the numerical core.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum NtdError {
    /// An argument violates a documented precondition (shape, mode, range).
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// A value left the domain of a formula (zero denominator, divergent
    /// divergence term, non-finite loss).
    #[error("numerical domain error{}: {message}", iteration.map(|i| alloc::format!(" at iteration {i}")).unwrap_or_default())]
    NumericalDomain {
        message: String,
        /// Solver iteration at which the error surfaced, when known.
        iteration: Option<usize>,
    },
}

impl NtdError {
    pub(crate) fn arg(msg: impl Into<String>) -> Self {
        NtdError::InvalidArgument(msg.into())
    }

    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        NtdError::NumericalDomain {
            message: msg.into(),
            iteration: None,
        }
    }

    pub(crate) fn at_iteration(self, iter: usize) -> Self {
        match self {
            NtdError::NumericalDomain { message, .. } => NtdError::NumericalDomain {
                message,
                iteration: Some(iter),
            },
            other => other,
        }
    }
}

pub type Result<T> = core::result::Result<T, NtdError>;
