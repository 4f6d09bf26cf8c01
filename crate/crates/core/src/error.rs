use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("graph must have at least one node")]
    EmptyGraph,

    #[error("node index {index} out of range for graph with {n_nodes} nodes")]
    NodeOutOfRange { index: usize, n_nodes: usize },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("shape mismatch: expected {expected}, got {actual}")]
    ShapeMismatch { expected: String, actual: String },

    #[error("pagerank did not converge after {iterations} iterations (residual {residual:e})")]
    NoConvergence { iterations: usize, residual: f64 },

    #[error("non-finite value at iteration {iteration}: {what}")]
    NonFinite { iteration: usize, what: String },

    #[error("attack set is empty")]
    EmptyAttackSet,

    #[error("every node was excluded from AAIR (|y| below {floor} km/h)")]
    AllNodesExcluded { floor: f64 },

    #[error("{path}: {message}")]
    Parse { path: PathBuf, message: String },

    #[error("checkpoint was trained on graph {expected} but graph {actual} was supplied")]
    GraphMismatch { expected: String, actual: String },

    #[error("{0}")]
    Config(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn parse(path: impl Into<PathBuf>, message: impl Into<String>) -> Self {
        Error::Parse {
            path: path.into(),
            message: message.into(),
        }
    }

    /// Short machine-readable tag used in CLI error lines.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::EmptyGraph => "empty_graph",
            Error::NodeOutOfRange { .. } => "node_out_of_range",
            Error::InvalidArgument(_) => "invalid_argument",
            Error::ShapeMismatch { .. } => "shape_mismatch",
            Error::NoConvergence { .. } => "no_convergence",
            Error::NonFinite { .. } => "non_finite",
            Error::EmptyAttackSet => "empty_attack_set",
            Error::AllNodesExcluded { .. } => "all_nodes_excluded",
            Error::Parse { .. } => "parse",
            Error::GraphMismatch { .. } => "graph_mismatch",
            Error::Config(_) => "config",
            Error::Io { .. } => "io",
        }
    }
}
