use thiserror::Error;

/// Errors raised by the simulator building blocks.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// A configuration value violates an invariant. The first field names the offending key.
    #[error("invalid configuration `{field}`: {reason}")]
    Config { field: &'static str, reason: String },

    /// An analytic expression was evaluated outside its domain.
    #[error("domain error: {0}")]
    Domain(String),

    /// The requested operating point cannot be produced by any interference power.
    #[error("target SINR {target_db:.2} dB is unreachable (interference-free SINR is {max_db:.2} dB)")]
    Unreachable { target_db: f64, max_db: f64 },
}

impl Error {
    pub(crate) fn config(field: &'static str, reason: impl Into<String>) -> Self {
        Error::Config {
            field,
            reason: reason.into(),
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
