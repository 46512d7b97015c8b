use thiserror::Error;

use crate::graph::NodeId;

/// Errors raised by graph construction, walks, detection and analytics.
#[derive(Debug, Error)]
pub enum Error {
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error("empty input: no edges found")]
    EmptyInput,

    #[error("node {node} out of range (n = {n})")]
    NodeOutOfRange { node: NodeId, n: usize },

    #[error("invalid k = {k} for a graph with {n} nodes")]
    InvalidK { k: usize, n: usize },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("stuck: zero degree, zero jump rate at node {node}")]
    Stuck { node: NodeId },

    #[error("walk cap of {max_steps} steps reached")]
    Timeout { max_steps: u64 },

    #[error("unreachable target {target}: the hitting-time system is singular")]
    UnreachableTarget { target: NodeId },

    #[error("graph has {n} nodes, above the dense-solve cap of {cap}; use Monte Carlo instead")]
    TooLargeForDenseSolve { n: usize, cap: usize },

    #[error("bad binary graph cache: {0}")]
    BadCache(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidParameter(msg.into())
}
