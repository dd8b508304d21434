use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },

    /// Input outside the domain of an operation (bad gamma, degenerate labels,
    /// disconnected graph, ...).
    #[error("domain error: {0}")]
    Domain(String),

    /// A numerical procedure failed (non-convergence, non-finite values,
    /// singular systems met mid-iteration).
    #[error("numeric error: {0}")]
    Numeric(String),

    /// Caller misuse: mismatched lengths, budgets out of range.
    #[error("usage error: {0}")]
    Usage(String),

    /// The trust-region instance is in the hard case and the caller asked
    /// for an exact answer.
    #[error("hard case: gradient has no component along the minimum eigenvector ({0}); jitter g and retry")]
    HardCase(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    pub(crate) fn numeric(msg: impl Into<String>) -> Self {
        Error::Numeric(msg.into())
    }

    pub(crate) fn usage(msg: impl Into<String>) -> Self {
        Error::Usage(msg.into())
    }
}
