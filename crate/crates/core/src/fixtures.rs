//! The 13-edge running example used throughout the tests, the CLI and the
//! Python bindings.

use std::collections::BTreeMap;

use crate::hypergraph::{EdgeId, Hypergraph, HyperedgeTree};

/// Edge schemes in id order.
pub const RUNNING_EXAMPLE_EDGES: [&str; 13] =
    ["ABC", "BD", "BO", "EFG", "BCE", "CEF", "CEJ", "HI", "LM", "EHJ", "KL", "HK", "HN"];

/// (child, parent) links of the reference tree, rooted at HN.
pub const RUNNING_EXAMPLE_LINKS: [(&str, &str); 12] = [
    ("HK", "HN"),
    ("KL", "HK"),
    ("LM", "KL"),
    ("EHJ", "HK"),
    ("HI", "EHJ"),
    ("CEJ", "EHJ"),
    ("CEF", "CEJ"),
    ("EFG", "CEF"),
    ("BCE", "CEJ"),
    ("ABC", "BCE"),
    ("BD", "BCE"),
    ("BO", "BCE"),
];

pub fn running_example_graph() -> Hypergraph {
    let names: Vec<String> = ('A'..='O').map(|c| c.to_string()).collect();
    let edges: Vec<(String, Vec<String>)> = RUNNING_EXAMPLE_EDGES
        .iter()
        .map(|s| (s.to_string(), s.chars().map(|c| c.to_string()).collect()))
        .collect();
    Hypergraph::new(&names, &edges).expect("running example is well formed")
}

pub fn running_example_tree() -> HyperedgeTree {
    let g = running_example_graph();
    let id = |n: &str| g.edge_by_name(n).unwrap();
    let mut parent: BTreeMap<EdgeId, Option<EdgeId>> = BTreeMap::new();
    parent.insert(id("HN"), None);
    for (c, p) in RUNNING_EXAMPLE_LINKS {
        parent.insert(id(c), Some(id(p)));
    }
    HyperedgeTree::from_parents(g, parent).expect("running example tree is well formed")
}
