use std::io;
use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: io::Error,
    },

    #[error("malformed XML at byte {offset}: {message}")]
    Xml { offset: u64, message: String },

    #[error("{path}:{line}: {message}")]
    Table {
        path: PathBuf,
        line: usize,
        message: String,
    },

    #[error("invalid config: {0}")]
    Config(String),

    #[error("negative distance {0} passed to triangle guard")]
    NegativeDistance(f64),

    #[error("revision {ordinal} out of range for page with {len} revisions")]
    RevisionOutOfRange { ordinal: usize, len: usize },

    #[error("page {0} not present in contribution table")]
    UnknownPage(u64),

    #[error("{metric} did not converge after {iterations} iterations (residual {residual:e})")]
    NotConverged {
        metric: &'static str,
        iterations: usize,
        residual: f64,
    },

    #[error("graph has no nodes")]
    EmptyGraph,

    #[error("evaluation undefined: {0}")]
    Evaluation(String),

    #[error("missing upstream artifact {artifact}; run `{stage}` first")]
    MissingUpstream { stage: String, artifact: PathBuf },

    #[error("stale artifact {artifact}: {reason}; rerun `{stage}`")]
    StaleArtifact {
        stage: String,
        artifact: PathBuf,
        reason: String,
    },
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn table(path: impl Into<PathBuf>, line: usize, message: impl Into<String>) -> Self {
        Error::Table {
            path: path.into(),
            line,
            message: message.into(),
        }
    }
}
