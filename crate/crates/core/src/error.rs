use std::io;
use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

/// Every failure the toolkit can report.
///
/// The variants are coarse on purpose: the command line maps each one to a
/// distinct exit code, so adding a variant is a user-visible change.
#[derive(Debug, Error)]
pub enum Error {
    /// Caller supplied something that violates an operation's precondition.
    #[error("invalid input: {0}")]
    Input(String),

    /// Text or binary data is not in the expected format (bad magic, bad hex, ...).
    #[error("format error: {0}")]
    Format(String),

    /// Structurally valid header but the payload or tables are inconsistent.
    #[error("corrupt data: {0}")]
    Corruption(String),

    #[error("data ended early: {0}")]
    Truncated(String),

    #[error("checksum mismatch: stored {stored:08x}, computed {computed:08x}")]
    Checksum { stored: u32, computed: u32 },

    #[error("unsupported format version {found} (expected {expected})")]
    Version { found: u16, expected: u16 },

    /// Container was produced against a different dictionary set.
    #[error("container was encoded with dictionary set {expected}, but {found} was supplied")]
    WrongDictionary { expected: String, found: String },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: io::Error,
    },

    #[error("image decode failed for {path}: {message}")]
    Image { path: PathBuf, message: String },
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn input(msg: impl Into<String>) -> Self {
        Error::Input(msg.into())
    }

    pub(crate) fn format(msg: impl Into<String>) -> Self {
        Error::Format(msg.into())
    }

    pub(crate) fn corrupt(msg: impl Into<String>) -> Self {
        Error::Corruption(msg.into())
    }

    pub(crate) fn truncated(msg: impl Into<String>) -> Self {
        Error::Truncated(msg.into())
    }

    /// True for failures that indicate damaged or tampered data rather than
    /// caller mistakes.
    pub fn is_integrity_failure(&self) -> bool {
        matches!(
            self,
            Error::Corruption(_) | Error::Truncated(_) | Error::Checksum { .. } | Error::Format(_)
        )
    }
}
