use thiserror::Error;

/// Coarse classification of failures, used by the CLI to pick an exit code.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorKind {
    /// Malformed input or a violated precondition.
    Schema,
    /// The data is well formed but cannot support the requested computation.
    Degenerate,
    Io,
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("line {line}: field `{field}`: {message}")]
    Row {
        line: u64,
        field: String,
        message: String,
    },

    #[error("csv: {0}")]
    Csv(#[from] csv::Error),

    #[error("invalid argument: {0}")]
    Invalid(String),

    #[error("degenerate data: {0}")]
    Degenerate(String),

    #[error("training split for group {group}, fold {fold} has no {missing} samples")]
    MissingClass {
        group: String,
        fold: usize,
        missing: &'static str,
    },

    #[error("json: {0}")]
    Json(#[from] serde_json::Error),

    #[error("io: {0}")]
    Io(#[from] std::io::Error),
}

impl Error {
    pub fn kind(&self) -> ErrorKind {
        match self {
            Error::Row { .. } | Error::Invalid(_) | Error::Json(_) => ErrorKind::Schema,
            Error::Csv(e) if e.is_io_error() => ErrorKind::Io,
            Error::Csv(_) => ErrorKind::Schema,
            Error::Degenerate(_) | Error::MissingClass { .. } => ErrorKind::Degenerate,
            Error::Io(_) => ErrorKind::Io,
        }
    }

    pub(crate) fn row(line: u64, field: &str, message: impl Into<String>) -> Self {
        Error::Row {
            line,
            field: field.to_string(),
            message: message.into(),
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
