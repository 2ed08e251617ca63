use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("parse error at row {row}, column {column}: {message}")]
    Parse {
        row: usize,
        column: usize,
        message: String,
    },

    #[error("unknown generator kind `{0}`")]
    UnknownKind(String),

    #[error("graph is disconnected ({components} components)")]
    Disconnected { components: usize },

    #[error("eigensolver did not converge after {iterations} iterations (max residual {residual:e})")]
    NoConvergence { iterations: usize, residual: f64 },

    #[error("denoising with theta = {theta} removed every point")]
    EverythingRemoved { theta: f64 },

    #[error("{n} points exceeds the dense solver cutoff of {cutoff}")]
    TooLarge { n: usize, cutoff: usize },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidInput(msg.into())
}
