use std::path::PathBuf;

/// Errors raised anywhere in the simulation stack.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    /// An input violated a documented precondition (shape, Hermitian symmetry, ...).
    #[error("precondition violated: {0}")]
    Precondition(String),

    /// A scalar argument was outside the domain of the function.
    #[error("domain error: {0}")]
    Domain(String),

    /// An iterative routine failed to converge or produced non-finite values.
    #[error("numerical failure: {0}")]
    Numerical(String),

    /// A subspace or correlation was too degenerate to estimate from.
    #[error("degenerate input: {0}")]
    Degenerate(String),

    #[error("configuration error: {0}")]
    Config(String),

    /// Training diverged; carries the phase and batch index where it happened.
    #[error("training diverged in {phase} at batch {batch}: {detail}")]
    Training {
        phase: String,
        batch: usize,
        detail: String,
    },

    #[error("missing calibration for N_win = {0}")]
    MissingCalibration(usize),

    #[error("malformed checkpoint: {0}")]
    Checkpoint(String),

    #[error("{path}: {source}")]
    File {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

impl Error {
    /// Process exit status used by the command line front end.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Numerical(_) | Error::Training { .. } => 3,
            _ => 2,
        }
    }
}
