use thiserror::Error;

/// Errors raised by the laboratory. Each variant belongs to one of the four
/// failure classes the command-line front end maps to an exit code.
#[derive(Debug, Error)]
pub enum Error {
    #[error("configuration: {0}")]
    Config(String),

    #[error("resource: {what} exceeds cap {cap}")]
    Resource { what: String, cap: usize },

    #[error("arithmetic overflow while {0}")]
    Overflow(String),

    #[error("accuracy: {0}")]
    Accuracy(String),

    #[error("divergence: measured ratio {ratio:.6e} between consecutive series levels")]
    Divergence { ratio: f64 },

    #[error("blow-up: non-finite state at t = {time:.6e}")]
    BlowUp { time: f64 },

    #[error("io: {0}")]
    Io(#[from] std::io::Error),

    #[error("format: {0}")]
    Format(String),
}

/// Coarse failure class, used for exit codes and machine-readable reasons.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorClass {
    Config,
    Resource,
    Accuracy,
}

impl Error {
    pub fn class(&self) -> ErrorClass {
        match self {
            Error::Config(_) | Error::Io(_) | Error::Format(_) => ErrorClass::Config,
            Error::Resource { .. } | Error::Overflow(_) => ErrorClass::Resource,
            Error::Accuracy(_) | Error::Divergence { .. } | Error::BlowUp { .. } => {
                ErrorClass::Accuracy
            }
        }
    }

    /// Short snake_case tag for the first line of CLI error output.
    pub fn tag(&self) -> &'static str {
        match self {
            Error::Config(_) => "config",
            Error::Resource { .. } => "resource_cap",
            Error::Overflow(_) => "overflow",
            Error::Accuracy(_) => "accuracy",
            Error::Divergence { .. } => "divergence",
            Error::BlowUp { .. } => "blow_up",
            Error::Io(_) => "io",
            Error::Format(_) => "format",
        }
    }

    pub(crate) fn config(msg: impl Into<String>) -> Self {
        Error::Config(msg.into())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
