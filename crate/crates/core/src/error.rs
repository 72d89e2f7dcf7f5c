use std::io;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

/// Broad failure classes, used by the command line driver to pick exit codes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorKind {
    Config,
    Data,
    Training,
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("unknown hub `{0}`")]
    UnknownHub(String),
    #[error("no feasible path from {origin} to {destination}")]
    Unreachable { origin: String, destination: String },
    #[error("shape mismatch: {0}")]
    Shape(String),
    #[error("cold start: {0}")]
    ColdStart(String),
    #[error("data integrity: {0}")]
    Data(String),
    #[error("log parse error on line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("training diverged at epoch {epoch}: loss is {loss}")]
    Diverged { epoch: usize, loss: f64 },
    #[error("training error: {0}")]
    Training(String),
    #[error("undefined metric: {0}")]
    UndefinedMetric(String),
    #[error("observation times out of sequence: {0}")]
    Sequence(String),
    #[error(transparent)]
    Io(#[from] io::Error),
}

impl Error {
    pub fn kind(&self) -> ErrorKind {
        match self {
            Error::Config(_) | Error::UnknownHub(_) | Error::Unreachable { .. } => ErrorKind::Config,
            Error::Diverged { .. } | Error::Training(_) => ErrorKind::Training,
            Error::Shape(_)
            | Error::ColdStart(_)
            | Error::Data(_)
            | Error::Parse { .. }
            | Error::UndefinedMetric(_)
            | Error::Sequence(_)
            | Error::Io(_) => ErrorKind::Data,
        }
    }
}

impl From<toml::de::Error> for Error {
    fn from(err: toml::de::Error) -> Self {
        Error::Config(err.to_string())
    }
}
