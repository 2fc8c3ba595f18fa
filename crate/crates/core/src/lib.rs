//! Constant-round joins of acyclic queries on a simulated massively parallel cluster.

pub mod cec;
pub mod engine;
pub mod error;
pub mod fixtures;
pub mod gen;
pub mod hypergraph;
pub mod io;
pub mod load;
pub mod oracle;
pub mod relation;
pub mod simcluster;

pub use cec::{edge_cover, signature_paths, Anchor, Cec, Clustering};
pub use error::{Error, Result};
pub use hypergraph::{build_join_tree, AttrId, AttrSet, EdgeId, HyperedgeTree, Hypergraph};
pub use relation::{Instance, Relation, Tuple, Value};
