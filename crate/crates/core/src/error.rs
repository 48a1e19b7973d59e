use thiserror::Error;

/// Errors surfaced by loading, training, and scoring.
#[derive(Debug, Error)]
pub enum Error {
    #[error("io error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },

    #[error("parse error at {path}:{line}: {msg}")]
    Parse {
        path: String,
        line: usize,
        msg: String,
    },

    #[error("duplicate entity id {id:?} at {path}:{line}")]
    DuplicateId {
        id: String,
        path: String,
        line: usize,
    },

    /// A caller violated an operation precondition (empty input, bad range,
    /// mismatched dimensions, overlapping spans, ...).
    #[error("{0}")]
    InvalidInput(String),

    /// A serialized model could not be loaded (version or label-order
    /// mismatch, corrupt payload).
    #[error("model error: {0}")]
    Model(String),
}

impl Error {
    pub(crate) fn io(path: &std::path::Path, source: std::io::Error) -> Self {
        Error::Io {
            path: path.display().to_string(),
            source,
        }
    }

    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidInput(msg.into())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
