use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("vertex {vertex} out of range for graph with {n} vertices")]
    VertexOutOfRange { vertex: usize, n: usize },

    #[error("invalid cut: {0}")]
    InvalidCut(&'static str),

    #[error("degenerate cut: one side has zero volume")]
    DegenerateCut,

    #[error("{what} needs at most {limit} vertices, got {got}")]
    TooLarge {
        what: &'static str,
        limit: usize,
        got: usize,
    },

    #[error("not a partition: {0}")]
    NotAPartition(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("sketch parameters or seeds differ")]
    SketchMismatch,

    #[error("power iteration did not converge after {iterations} iterations")]
    NumericFailure { iterations: usize },

    #[error("cut enumeration exceeded its budget of {budget} search nodes")]
    EnumerationBudget { budget: usize },

    #[error("sparsifier pool exhausted: {0}")]
    PoolExhausted(String),

    #[error("sketch recovery failed and the retry budget is spent: {0}")]
    RecoveryExhausted(String),

    #[error("infeasible generator parameters: {0}")]
    Infeasible(String),

    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
