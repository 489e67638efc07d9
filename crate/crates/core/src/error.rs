use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid model: {0}")]
    InvalidModel(String),

    #[error("observation {position} (count {count}) has zero probability under every state")]
    ImpossibleObservation { position: usize, count: u64 },

    #[error("every state path has zero probability")]
    ImpossibleSequence,

    #[error("length mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },

    #[error("operation requires a two-state model, got {0} states")]
    NotTwoState(usize),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// Min-max scaling of an Artemis axis collapsed because the raw values are constant.
    #[error("degenerate scaling: the {0} axis is constant over the sweep")]
    DegenerateScaling(&'static str),

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
}

impl Error {
    /// Stable, machine-readable category used by the CLI and the C ABI.
    pub fn category(&self) -> &'static str {
        match self {
            Error::InvalidModel(_) => "validation",
            Error::ImpossibleObservation { .. } | Error::ImpossibleSequence => "impossible",
            Error::LengthMismatch { .. } | Error::InvalidArgument(_) => "argument",
            Error::NotTwoState(_) => "two-state",
            Error::DegenerateScaling(_) => "degenerate-scaling",
            Error::Io { .. } => "io",
            Error::Parse { .. } => "parse",
        }
    }
}
