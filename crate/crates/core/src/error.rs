use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("self-loop at node {0}")]
    SelfLoop(usize),

    #[error("duplicate edge ({0}, {1})")]
    DuplicateEdge(usize, usize),

    #[error("edge endpoint {node} out of range for a graph with {num_nodes} nodes")]
    EndpointOutOfRange { node: usize, num_nodes: usize },

    #[error("graph must have at least {min} nodes, got {got}")]
    TooFewNodes { min: usize, got: usize },

    #[error("graph is disconnected")]
    Disconnected,

    #[error("{what} requires {requested} nodes but the cap is {cap} (raise it with the matching flag or environment variable)")]
    CapExceeded {
        what: &'static str,
        requested: u128,
        cap: usize,
    },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("malformed edge list at line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error("matrix is not symmetric")]
    NotSymmetric,

    #[error("found {0} eigenvalues below the zero tolerance: disconnected or tolerance misconfigured")]
    ZeroEigenvalues(usize),

    #[error("insufficient scaling range: {0}")]
    InsufficientRange(String),

    #[error("simulation diverged: {0}")]
    Divergence(String),

    #[error("internal invariant violated: {0}")]
    Invariant(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    /// True for failures of a numerical or scientific invariant, as opposed
    /// to bad input.
    pub fn is_internal(&self) -> bool {
        matches!(
            self,
            Error::Invariant(_) | Error::Divergence(_) | Error::NotSymmetric
        )
    }
}
