use thiserror::Error;

/// Errors raised anywhere in the analysis pipeline.
#[derive(Debug, Error)]
pub enum Error {
    /// Exact exponent arithmetic left the range of machine integers.
    #[error("arithmetic overflow: {0}")]
    Arithmetic(String),

    /// An operation was applied outside its mathematical domain.
    #[error("domain error: {0}")]
    Domain(String),

    /// Malformed input text or document.
    #[error("parse error at {location}: {message}")]
    Parse { location: String, message: String },

    /// Well-formed input that violates a model constraint.
    #[error("invalid input at {location}: {message}")]
    Invalid { location: String, message: String },

    /// A configured size limit was exceeded.
    #[error("resource limit: {0}")]
    Resource(String),

    /// A contract between internal components was broken.
    #[error("internal error: {0}")]
    Internal(String),

    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub(crate) fn invalid(location: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Invalid {
            location: location.into(),
            message: message.into(),
        }
    }

    pub(crate) fn parse(location: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Parse {
            location: location.into(),
            message: message.into(),
        }
    }

    /// True for errors caused by the caller's input rather than a defect.
    pub fn is_input_error(&self) -> bool {
        matches!(
            self,
            Error::Parse { .. }
                | Error::Invalid { .. }
                | Error::Domain(_)
                | Error::Io { .. }
                | Error::Resource(_)
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;
