use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("shape mismatch in {op}: expected {expected}, got {got}")]
    Shape {
        op: &'static str,
        expected: String,
        got: String,
    },

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("non-finite value produced by {0}")]
    NonFinite(&'static str),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("bad magic in {path}: expected {expected:?}")]
    BadMagic { path: String, expected: &'static str },

    #[error("unsupported {format} version {version}")]
    UnsupportedVersion { format: &'static str, version: u32 },

    #[error("truncated {what}: expected {expected} bytes, found {found}")]
    Truncated {
        what: String,
        expected: usize,
        found: usize,
    },

    #[error("non-finite sample in channel {channel} ({name}), epoch {epoch}")]
    NonFiniteSample {
        channel: usize,
        name: String,
        epoch: usize,
    },

    #[error("malformed {file} at line {line}: {msg}")]
    Parse {
        file: String,
        line: usize,
        msg: String,
    },

    #[error("class {class} has {count} sample(s); a split needs at least 2")]
    ClassTooSmall { class: usize, count: usize },

    #[error("degenerate geometry: {0}")]
    DegenerateGeometry(String),

    #[error("degenerate row for node {node}: {reason}")]
    DegenerateRow { node: usize, reason: &'static str },

    #[error("correlation failed at timestamp {index}: {source}")]
    AtTimestamp {
        index: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("invalid label: {0}")]
    InvalidLabel(String),

    #[error("forward cache missing or stale: {0}")]
    StaleCache(&'static str),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}: {source}")]
    Json {
        path: PathBuf,
        #[source]
        source: serde_json::Error,
    },
}

impl Error {
    pub(crate) fn shape(op: &'static str, expected: impl ToString, got: impl ToString) -> Self {
        Error::Shape {
            op,
            expected: expected.to_string(),
            got: got.to_string(),
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// Process exit code for the command-line front end:
    /// 2 configuration, 3 data, 4 runtime.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Config(_) | Error::Json { .. } => 2,
            Error::BadMagic { .. }
            | Error::UnsupportedVersion { .. }
            | Error::Truncated { .. }
            | Error::NonFiniteSample { .. }
            | Error::Parse { .. }
            | Error::ClassTooSmall { .. }
            | Error::DegenerateGeometry(_)
            | Error::DegenerateRow { .. }
            | Error::InvalidLabel(_)
            | Error::Io { .. } => 3,
            Error::AtTimestamp { source, .. } => source.exit_code(),
            Error::Shape { .. }
            | Error::InvalidInput(_)
            | Error::NonFinite(_)
            | Error::StaleCache(_) => 4,
        }
    }
}
