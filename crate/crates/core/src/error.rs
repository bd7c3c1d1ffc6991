use std::path::PathBuf;

use thiserror::Error;

/// Errors raised anywhere in the toolkit.
#[derive(Debug, Error)]
pub enum Error {
    #[error("node id {id} out of range for {num_nodes} nodes")]
    NodeOutOfRange { id: usize, num_nodes: usize },

    #[error("feature matrix has {rows} rows but the domain has {expected} cells at rank {rank}")]
    FeatureRows { rank: usize, rows: usize, expected: usize },

    #[error("rank {rank} is not populated on this {kind} (max rank {max_rank})")]
    RankNotPopulated { kind: &'static str, rank: usize, max_rank: usize },

    #[error("{0}")]
    Unsupported(String),

    #[error("shape mismatch in {kind}: {detail}")]
    Shape { kind: &'static str, detail: String },

    #[error("non-finite value in {0}")]
    NonFinite(String),

    #[error("invalid complex: {0}")]
    Invalid(#[from] crate::complex::Violation),

    #[error("schema error in {location}: {message}")]
    Schema { location: String, message: String },

    #[error("lifting refused: closed neighborhood of node {node} has {size} nodes (limit {limit})")]
    NeighborhoodTooLarge { node: usize, size: usize, limit: usize },

    #[error("lifting failed on sample {index}: {source}")]
    Sample {
        index: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("invalid configuration:\n  {}", .0.join("\n  "))]
    Config(Vec<String>),

    #[error("training aborted: {0}")]
    Aborted(String),

    #[error("io error at {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

impl Error {
    pub(crate) fn schema(location: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Schema { location: location.into(), message: message.into() }
    }

    pub(crate) fn shape(kind: &'static str, detail: impl Into<String>) -> Self {
        Error::Shape { kind, detail: detail.into() }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io { path: path.into(), source }
    }

    pub(crate) fn config(msg: impl Into<String>) -> Self {
        Error::Config(vec![msg.into()])
    }

    /// Innermost error, looking through per-sample wrappers.
    pub fn root(&self) -> &Error {
        match self {
            Error::Sample { source, .. } => source.root(),
            other => other,
        }
    }
}
