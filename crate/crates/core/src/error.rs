use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    /// A record that could not be read, or that lacks a required field.
    #[error("{origin}, line {line}: field `{field}`: {message}")]
    Record {
        origin: String,
        line: usize,
        field: String,
        message: String,
    },

    #[error("{origin}, line {line}: unparseable timestamp {value:?}")]
    Timestamp {
        origin: String,
        line: usize,
        value: String,
    },

    #[error("duplicate post id {0:?}")]
    DuplicateId(String),

    #[error("posts are not sorted by (source, created_at, id) at position {position}")]
    Unsorted { position: usize },

    #[error("{path}, line {line}: {message}")]
    ConfigEntry {
        path: String,
        line: usize,
        message: String,
    },

    /// An argument or configuration knob outside its allowed range.
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("vectors differ in length ({left} vs {right})")]
    LengthMismatch { left: usize, right: usize },

    #[error("spearman needs at least 3 observations, got {0}")]
    TooShort(usize),

    #[error("label row {row}: {message}")]
    Label { row: usize, message: String },

    #[error("missing upstream file {0}")]
    MissingUpstream(PathBuf),

    #[error("{path}: {message}")]
    Format { path: PathBuf, message: String },

    #[error("stage `{stage}`: {source}")]
    Stage {
        stage: &'static str,
        #[source]
        source: Box<Error>,
    },
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn format(path: impl Into<PathBuf>, message: impl ToString) -> Self {
        Error::Format {
            path: path.into(),
            message: message.to_string(),
        }
    }

    pub fn in_stage(self, stage: &'static str) -> Self {
        match self {
            Error::Stage { .. } => self,
            other => Error::Stage {
                stage,
                source: Box::new(other),
            },
        }
    }

    /// True for errors caused by bad arguments or configuration rather
    /// than by the data or the environment.
    pub fn is_validation(&self) -> bool {
        match self {
            Error::InvalidConfig(_) | Error::ConfigEntry { .. } => true,
            Error::Stage { source, .. } => source.is_validation(),
            _ => false,
        }
    }
}
