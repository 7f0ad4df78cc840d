use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("dimension mismatch in {context}: expected {expected}, found {found}")]
    DimensionMismatch {
        context: &'static str,
        expected: usize,
        found: usize,
    },

    #[error("rank deficient: requested {requested} modes but only {achievable} singular values exceed the rank threshold")]
    RankDeficient { requested: usize, achievable: usize },

    #[error("degenerate basis: interpolation residual vanished at step {step}")]
    DegenerateBasis { step: usize },

    #[error("singular matrix: pivot {pivot:e} below threshold at column {column}")]
    Singular { column: usize, pivot: f64 },

    #[error("eigen-solver did not converge after {sweeps} sweeps (off-diagonal norm {residual:e})")]
    NoConvergence { sweeps: usize, residual: f64 },

    #[error("numeric overflow in LSTM forward pass at timestep {timestep}")]
    NumericOverflow { timestep: usize },

    #[error("training diverged: validation loss is NaN at epoch {epoch}")]
    TrainingDiverged { epoch: usize },

    #[error("{method} integration diverged at step {step}")]
    Diverged { method: String, step: usize },

    #[error("invariant violation: {0}")]
    InvariantViolation(String),

    #[error("config error in `{key}`: {message}")]
    Config { key: String, message: String },

    #[error("missing artifact {0} (run the upstream stage first)")]
    MissingArtifact(PathBuf),

    #[error("malformed artifact {path}: {message}")]
    MalformedArtifact { path: PathBuf, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }
}
