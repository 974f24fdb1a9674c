use std::path::PathBuf;

use thiserror::Error;

use crate::graph::NodeId;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("cannot read {path}: {source}")]
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

    #[error("graph has no edges")]
    EmptyGraph,

    #[error("no label in {0} matched a node of the graph")]
    NoLabelsMatched(PathBuf),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("node {0} is isolated and cannot start a walk")]
    IsolatedStart(NodeId),

    #[error("corpus is empty")]
    EmptyCorpus,

    #[error("zero vector has no direction")]
    ZeroVector,

    #[error("dimension mismatch: {left} vs {right}")]
    DimensionMismatch { left: usize, right: usize },

    #[error("value {value} is outside the domain of {what}")]
    Domain { what: &'static str, value: f64 },

    #[error("cannot form {k} clusters from {n} points")]
    TooManyClusters { k: usize, n: usize },

    #[error("class {class} has {count} labelled nodes, at least 2 are required")]
    ClassTooSmall { class: String, count: usize },

    #[error("{0}")]
    Evaluation(String),

    #[error("graph is too sparse: {0}")]
    TooSparse(String),

    #[error("node {0} has no embedding row")]
    MissingEmbedding(String),

    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// True when the error comes from bad user input (files, flags, plans)
    /// rather than from a failure inside a computation.
    pub fn is_input_error(&self) -> bool {
        matches!(
            self,
            Error::Io { .. }
                | Error::Parse { .. }
                | Error::EmptyGraph
                | Error::NoLabelsMatched(_)
                | Error::InvalidConfig(_)
                | Error::EmptyCorpus
                | Error::Domain { .. }
                | Error::TooManyClusters { .. }
                | Error::ClassTooSmall { .. }
                | Error::TooSparse(_)
                | Error::MissingEmbedding(_)
        )
    }
}
