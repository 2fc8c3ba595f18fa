#![allow(dead_code)]

use std::collections::BTreeSet;

use acyclic_mpc::cec::{
    check_distinct_clusters_1, check_distinct_clusters_2, cleanse, decompose, enumerate_k_groups,
    enumerate_super_k_groups, find_anchor, remove_attribute,
};
use acyclic_mpc::fixtures::running_example_graph;
use acyclic_mpc::gen::{GeneratorSpec, Skew};
use acyclic_mpc::{build_join_tree, edge_cover, signature_paths, Cec, HyperedgeTree, Hypergraph};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// A random acyclic hypergraph with at most `max_edges` edges and
/// `max_attrs` attributes: a random tree of edges where every attribute
/// occupies a random connected subtree.
pub fn random_acyclic(rng: &mut ChaCha8Rng, max_edges: usize, max_attrs: usize) -> Hypergraph {
    let n = rng.random_range(1..=max_edges);
    let parent: Vec<Option<usize>> = (0..n).map(|i| if i == 0 { None } else { Some(rng.random_range(0..i)) }).collect();
    let mut adj = vec![Vec::new(); n];
    for (i, p) in parent.iter().enumerate() {
        if let Some(p) = *p {
            adj[i].push(p);
            adj[p].push(i);
        }
    }
    let na = rng.random_range(1..=max_attrs);
    let mut attrs: Vec<BTreeSet<usize>> = vec![BTreeSet::new(); n];
    for a in 0..na {
        let start = rng.random_range(0..n);
        let mut nodes = vec![start];
        let target = rng.random_range(1..=n);
        while nodes.len() < target {
            let frontier: Vec<usize> =
                nodes.iter().flat_map(|&x| adj[x].iter().copied()).filter(|y| !nodes.contains(y)).collect();
            if frontier.is_empty() || rng.random_bool(0.3) {
                break;
            }
            nodes.push(frontier[rng.random_range(0..frontier.len())]);
        }
        for x in nodes {
            attrs[x].insert(a);
        }
    }
    // Every edge needs an attribute; borrowing one from a tree neighbour keeps it connected.
    for i in 0..n {
        if attrs[i].is_empty() {
            let donor = adj[i].iter().copied().find(|&j| !attrs[j].is_empty());
            match donor {
                Some(j) => {
                    let a = *attrs[j].iter().next().unwrap();
                    attrs[i].insert(a);
                }
                None => {
                    attrs[i].insert(0);
                    for &j in &adj[i] {
                        attrs[j].insert(0);
                    }
                }
            }
        }
    }
    // Shuffle edge ids so the tree shape is not tied to the numbering.
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(rng);
    let used: BTreeSet<usize> = attrs.iter().flatten().copied().collect();
    let names: Vec<String> = used.iter().map(|a| format!("A{a}")).collect();
    let edges: Vec<(String, Vec<String>)> = order
        .iter()
        .enumerate()
        .map(|(k, &i)| (format!("e{k}"), attrs[i].iter().map(|a| format!("A{a}")).collect()))
        .collect();
    Hypergraph::new(&names, &edges).unwrap()
}

pub fn corpus(seed: u64, count: usize) -> Vec<Hypergraph> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count).map(|_| random_acyclic(&mut rng, 6, 10)).collect()
}

/// A reverse topological order (children before parents) with random tie-breaking.
pub fn random_reverse_topological(t: &HyperedgeTree, rng: &mut ChaCha8Rng) -> Vec<usize> {
    let mut pending: std::collections::BTreeMap<usize, usize> =
        t.graph().edge_ids().map(|e| (e, t.children(e).len())).collect();
    let mut ready: Vec<usize> = pending.iter().filter(|(_, &c)| c == 0).map(|(&e, _)| e).collect();
    let mut out = Vec::new();
    while !ready.is_empty() {
        let i = rng.random_range(0..ready.len());
        let e = ready.swap_remove(i);
        out.push(e);
        if let Some(p) = t.parent(e) {
            let c = pending.get_mut(&p).unwrap();
            *c -= 1;
            if *c == 0 {
                ready.push(p);
            }
        }
    }
    out
}

/// The clean tree reached by contracting subsumed links of the GYO tree.
pub fn clean_tree(g: &Hypergraph) -> HyperedgeTree {
    build_join_tree(g).expect("corpus graphs are acyclic").cleaning_plan().0
}

/// Outcome of walking every simplification reachable from a cover.
#[derive(Default, Debug)]
pub struct SimplificationTally {
    pub simplifications: usize,
    pub decompositions: usize,
    pub k_groups: usize,
    pub super_groups: usize,
    pub violations: Vec<String>,
}

/// Removes the anchor attribute, cleanses, and decomposes at the canonical
/// anchor, checks the carried covers and group mappings, and recurses into
/// every resulting piece.
pub fn walk_simplifications(f: &Cec, tally: &mut SimplificationTally, groups: bool) {
    let t = f.tree();
    if t.len() < 2 {
        return;
    }
    let anchor = match find_anchor(f) {
        Ok(a) => a,
        Err(e) => {
            tally.violations.push(format!("no anchor on a clean tree: {e}"));
            return;
        }
    };
    let c = match signature_paths(f) {
        Ok(c) => c,
        Err(e) => {
            tally.violations.push(format!("signature paths: {e}"));
            return;
        }
    };

    match remove_attribute(f, &anchor) {
        Ok(residual) => {
            let g1 = residual.tree().graph();
            for &e in residual.cover.members() {
                if g1.is_subsumed(e) {
                    tally.violations.push(format!("subsumed edge {e} of G' lies in F'"));
                }
            }
            match cleanse(&residual) {
                Ok(cl) => {
                    tally.simplifications += 1;
                    if edge_cover(cl.tree()).members() != cl.cover.members() {
                        tally.violations.push("carried F* differs from the recomputed cover".into());
                    }
                    if groups {
                        match signature_paths(&cl.cover) {
                            Ok(c_star) => {
                                for k in 1..=c_star.len() {
                                    for grp in enumerate_k_groups(&c_star, k) {
                                        tally.k_groups += 1;
                                        match check_distinct_clusters_1(&c_star, &cl.map, &c, &grp) {
                                            Ok(true) => {}
                                            Ok(false) => tally.violations.push(format!("k-group {grp:?} of C* does not map into C")),
                                            Err(e) => tally.violations.push(format!("k-group check: {e}")),
                                        }
                                    }
                                }
                            }
                            Err(e) => tally.violations.push(format!("C*: {e}")),
                        }
                    }
                    walk_simplifications(&cl.cover, tally, groups);
                }
                Err(e) => tally.violations.push(format!("cleanse: {e}")),
            }
        }
        Err(e) => tally.violations.push(format!("remove_attribute: {e}")),
    }

    match decompose(f, &anchor) {
        Ok(d) => {
            tally.decompositions += 1;
            for piece in d.pieces() {
                if edge_cover(piece.tree()).members() != piece.members() {
                    tally.violations.push("carried piece cover differs from the recomputed cover".into());
                }
            }
            if groups {
                let total: usize = d.pieces().map(|p| p.len()).sum();
                for k in 1..=total.min(c.len()) {
                    match enumerate_super_k_groups(&d, k) {
                        Ok(all) => {
                            for grp in all {
                                tally.super_groups += 1;
                                match check_distinct_clusters_2(&d, &c, &grp) {
                                    Ok(true) => {}
                                    Ok(false) => tally.violations.push(format!("super-group {grp:?} is not a k-group of C")),
                                    Err(e) => tally.violations.push(format!("super-group check: {e}")),
                                }
                            }
                        }
                        Err(e) => tally.violations.push(format!("super-groups: {e}")),
                    }
                }
            }
            let pieces: Vec<Cec> = d.pieces().cloned().collect();
            for p in &pieces {
                walk_simplifications(p, tally, groups);
            }
        }
        Err(e) => tally.violations.push(format!("decompose: {e}")),
    }
}

/// Query shapes of the engine suite.
pub fn engine_queries() -> Vec<(&'static str, Hypergraph)> {
    vec![
        ("chain2", Hypergraph::from_schemes(&["AB", "BC"]).unwrap()),
        ("chain4", Hypergraph::from_schemes(&["AB", "BC", "CD", "DE"]).unwrap()),
        ("star", Hypergraph::from_schemes(&["AB", "AC", "AD"]).unwrap()),
        ("tree", Hypergraph::from_schemes(&["ABC", "BD", "CE", "EF"]).unwrap()),
        ("running", running_example_graph()),
    ]
}

/// Generator for one suite instance. Skew is applied to the first anchor
/// attribute so heavy values exist without exploding the join.
pub fn suite_generator(g: &Hypergraph, skew: Skew, seed: u64) -> GeneratorSpec {
    let (size, domain) = if g.num_edges() > 6 { (100, 2000) } else { (200, 1000) };
    let t = clean_tree(g);
    let anchor = find_anchor(&edge_cover(&t)).unwrap();
    GeneratorSpec {
        skewed: Some(vec![g.attribute_name(anchor.attribute).to_string()]),
        planted: 3,
        ..GeneratorSpec::new(seed, size, skew, domain)
    }
}
