use thiserror::Error;

/// Errors produced by graph loading, validation, and the detection engine.
#[derive(Debug, Error)]
pub enum Error {
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("line {line}: self-loop on vertex {vertex}")]
    SelfLoop { line: usize, vertex: usize },

    #[error("line {line}: duplicate edge {u}-{v} (first seen on line {first})")]
    DuplicateEdge {
        line: usize,
        first: usize,
        u: usize,
        v: usize,
    },

    #[error("line {line}: edge weight must be positive and finite, got {weight}")]
    InvalidWeight { line: usize, weight: f64 },

    #[error("vertex ids must be dense: vertex {0} has no incident edge")]
    SparseVertexId(usize),

    #[error("size mismatch: expected {expected} vertices, found {found}")]
    SizeMismatch { expected: usize, found: usize },

    #[error("graph has no edge weight (m = 0); modularity is undefined")]
    EmptyGraph,

    #[error("community {0} is not active")]
    InactiveCommunity(usize),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("generation failed: {0}")]
    Infeasible(String),

    #[error("missing column `{0}`")]
    MissingColumn(String),

    #[error("row {row}, column `{column}`: `{value}` is not numeric")]
    NonNumeric {
        row: usize,
        column: String,
        value: String,
    },

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidArgument(msg.into())
}
