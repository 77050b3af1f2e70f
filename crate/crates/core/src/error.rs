use thiserror::Error;

#[derive(Debug, Error)]
pub enum GepError {
    /// The config document does not match the expected schema.
    #[error("config schema violation at `{path}`: {message}")]
    Schema { path: String, message: String },

    /// A value parsed fine but breaks a domain invariant.
    #[error("invalid value at `{path}`: {message}")]
    Invariant { path: String, message: String },

    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("degenerate input: {0}")]
    Degenerate(String),

    #[error("i/o error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

impl GepError {
    pub(crate) fn invariant(path: impl Into<String>, message: impl Into<String>) -> Self {
        GepError::Invariant {
            path: path.into(),
            message: message.into(),
        }
    }

    pub(crate) fn schema(path: impl Into<String>, message: impl Into<String>) -> Self {
        GepError::Schema {
            path: path.into(),
            message: message.into(),
        }
    }

    pub(crate) fn io(path: impl AsRef<std::path::Path>, source: std::io::Error) -> Self {
        GepError::Io {
            path: path.as_ref().display().to_string(),
            source,
        }
    }

    /// True for errors caused by the config document rather than the environment.
    pub fn is_config_error(&self) -> bool {
        matches!(
            self,
            GepError::Schema { .. }
                | GepError::Invariant { .. }
                | GepError::Dimension(_)
                | GepError::Degenerate(_)
                | GepError::Json(_)
        )
    }
}

pub type Result<T> = std::result::Result<T, GepError>;
