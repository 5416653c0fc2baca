use std::path::PathBuf;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("failed to parse scenario: {0}")]
    Parse(String),

    #[error("invalid {field}: {message}")]
    Invalid { field: String, message: String },

    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("round-initiation iteration did not converge after {iterations} steps (last change {last_delta:e})")]
    NoConvergence { iterations: usize, last_delta: f64 },

    #[error("fit undefined: {0}")]
    DegenerateFit(String),

    #[error("empty input: {0}")]
    Empty(String),
}

impl Error {
    pub(crate) fn invalid(field: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Invalid {
            field: field.into(),
            message: message.into(),
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// True for errors caused by bad input rather than by a computation that
    /// failed on valid input.
    pub fn is_validation(&self) -> bool {
        matches!(
            self,
            Error::Parse(_) | Error::Invalid { .. } | Error::Io { .. } | Error::Empty(_)
        )
    }
}
