use crate::hypergraph::{AttrId, EdgeId};

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("invalid hypergraph: {0}")]
    InvalidHypergraph(String),

    #[error("unknown attribute `{0}`")]
    UnknownAttribute(String),

    #[error("attribute {0} does not occur in any hyperedge")]
    AttributeAbsent(AttrId),

    #[error("unknown hyperedge {0}")]
    UnknownEdge(EdgeId),

    #[error("invalid hyperedge tree: {0}")]
    InvalidTree(String),

    #[error("query is not acyclic")]
    Cyclic,

    #[error("the root of the tree is not in the edge cover")]
    RootNotInCover,

    #[error("hypergraph is not clean: {0}")]
    NotClean(String),

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("not a valid k-group: {0}")]
    InvalidGroup(String),

    #[error("k = {k} is out of range for a clustering with {clusters} clusters")]
    KOutOfRange { k: usize, clusters: usize },

    #[error("invariant check failed: {0}")]
    InvariantViolation(String),

    #[error("oracle limit exceeded: {0}")]
    OracleLimit(String),

    #[error("machine budget exhausted: {0}")]
    MachineBudget(String),

    #[error("simulation error: {0}")]
    Simulation(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}
