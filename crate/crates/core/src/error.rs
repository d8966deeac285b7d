use std::path::PathBuf;

/// Errors produced by the equalizer/decoder toolkit.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    /// A caller broke a shape or value precondition.
    #[error("contract violation: {0}")]
    Contract(String),

    #[error("non-finite value encountered in {0}")]
    NonFinite(&'static str),

    /// An operation was invoked in the wrong state (e.g. backward before forward).
    #[error("invalid state: {0}")]
    State(&'static str),

    #[error("singular system: {0}")]
    Singular(String),

    #[error("invalid specification: {0}")]
    InvalidSpec(String),

    #[error("training diverged at iteration {iteration} (loss = {loss})")]
    Divergence { iteration: usize, loss: f64 },

    #[error("config error at line {line}: {message}")]
    Config { line: usize, message: String },

    #[error("parse error: {0}")]
    Parse(String),

    #[error("unknown experiment id `{0}`")]
    UnknownExperiment(String),

    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn contract(msg: impl Into<String>) -> Self {
        Error::Contract(msg.into())
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
