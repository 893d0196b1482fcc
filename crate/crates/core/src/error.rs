use std::path::PathBuf;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}:{line}: {message}")]
    Parse {
        path: PathBuf,
        line: usize,
        message: String,
    },

    #[error("validation failed: {0}")]
    Validation(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("utility `{utility}` failed on (hypothesis {row}, pseudo-reference {col}): {message}")]
    Utility {
        utility: String,
        row: usize,
        col: usize,
        message: String,
    },

    #[error("unknown utility `{name}`; available: {}", available.join(", "))]
    UnknownUtility { name: String, available: Vec<String> },

    #[error("scorer request failed with status {status}: {body}")]
    ScorerStatus { status: u16, body: String },

    #[error("scorer transport error: {0}")]
    ScorerTransport(String),

    #[error("scorer protocol error: {0}")]
    ScorerProtocol(String),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// Whether the error stems from bad input rather than from the toolkit
    /// itself. The CLI maps these to exit status 2.
    pub fn is_user_error(&self) -> bool {
        matches!(
            self,
            Error::Io { .. }
                | Error::Parse { .. }
                | Error::Validation(_)
                | Error::InvalidArgument(_)
                | Error::UnknownUtility { .. }
        )
    }
}
