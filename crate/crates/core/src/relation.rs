//! Relations (sets of tuples over a scheme) and query instances.

use std::collections::{BTreeMap, HashMap, HashSet};

use crate::error::{Error, Result};
use crate::hypergraph::{AttrId, AttrSet, EdgeId, Hypergraph};

pub type Value = u64;

/// A tuple over a scheme, one value per attribute in ascending attribute-id order.
pub type Tuple = Vec<Value>;

/// Projects `t` (over `from`) onto `to`, which must be a subset of `from`.
pub fn project_tuple(from: AttrSet, t: &[Value], to: AttrSet) -> Tuple {
    debug_assert!(to.is_subset(from));
    to.iter().map(|a| t[from.position(a).unwrap()]).collect()
}

/// Combines two tuples that agree on their common attributes.
pub fn merge_tuples(s1: AttrSet, t1: &[Value], s2: AttrSet, t2: &[Value]) -> Tuple {
    s1.union(s2)
        .iter()
        .map(|a| match s1.position(a) {
            Some(i) => t1[i],
            None => t2[s2.position(a).unwrap()],
        })
        .collect()
}

/// A set of tuples over a common scheme, kept sorted and duplicate-free.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Relation {
    scheme: AttrSet,
    tuples: Vec<Tuple>,
}

impl Relation {
    pub fn new(scheme: AttrSet, mut tuples: Vec<Tuple>) -> Result<Self> {
        if let Some(t) = tuples.iter().find(|t| t.len() != scheme.len()) {
            return Err(Error::Parse(format!("tuple of arity {} for a scheme of {} attributes", t.len(), scheme.len())));
        }
        tuples.sort_unstable();
        tuples.dedup();
        Ok(Relation { scheme, tuples })
    }

    pub(crate) fn from_unsorted(scheme: AttrSet, mut tuples: Vec<Tuple>) -> Self {
        tuples.sort_unstable();
        tuples.dedup();
        Relation { scheme, tuples }
    }

    pub fn empty(scheme: AttrSet) -> Self {
        Relation { scheme, tuples: Vec::new() }
    }

    pub fn scheme(&self) -> AttrSet {
        self.scheme
    }

    pub fn len(&self) -> usize {
        self.tuples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tuples.is_empty()
    }

    pub fn tuples(&self) -> &[Tuple] {
        &self.tuples
    }

    pub fn into_tuples(self) -> Vec<Tuple> {
        self.tuples
    }

    pub fn contains(&self, t: &[Value]) -> bool {
        self.tuples.binary_search_by(|x| x.as_slice().cmp(t)).is_ok()
    }

    /// Column index of attribute `a`.
    pub fn column(&self, a: AttrId) -> Option<usize> {
        self.scheme.position(a)
    }

    pub fn project(&self, to: AttrSet) -> Relation {
        let to = to.intersection(self.scheme);
        Relation::from_unsorted(to, self.tuples.iter().map(|t| project_tuple(self.scheme, t, to)).collect())
    }

    pub fn filter(&self, mut keep: impl FnMut(&[Value]) -> bool) -> Relation {
        Relation { scheme: self.scheme, tuples: self.tuples.iter().filter(|t| keep(t)).cloned().collect() }
    }

    /// Keeps the tuples whose projection onto the common attributes occurs in `other`.
    pub fn semi_join(&self, other: &Relation) -> Relation {
        let common = self.scheme.intersection(other.scheme);
        let keys: HashSet<Tuple> = other.tuples.iter().map(|t| project_tuple(other.scheme, t, common)).collect();
        self.filter(|t| keys.contains(&project_tuple(self.scheme, t, common)))
    }

    /// Hash join on the common attributes.
    pub fn natural_join(&self, other: &Relation) -> Relation {
        let common = self.scheme.intersection(other.scheme);
        let (build, probe) = if self.len() <= other.len() { (self, other) } else { (other, self) };
        let mut index: HashMap<Tuple, Vec<&Tuple>> = HashMap::new();
        for t in &build.tuples {
            index.entry(project_tuple(build.scheme, t, common)).or_default().push(t);
        }
        let mut out = Vec::new();
        for t in &probe.tuples {
            if let Some(matches) = index.get(&project_tuple(probe.scheme, t, common)) {
                for m in matches {
                    out.push(merge_tuples(probe.scheme, t, build.scheme, m));
                }
            }
        }
        Relation::from_unsorted(self.scheme.union(other.scheme), out)
    }

    /// Adds attribute `a` with the constant value `v` to every tuple.
    pub fn with_constant(&self, a: AttrId, v: Value) -> Relation {
        let s = AttrSet::singleton(a);
        let one = [v];
        Relation::from_unsorted(
            self.scheme.with(a),
            self.tuples.iter().map(|t| merge_tuples(self.scheme, t, s, &one)).collect(),
        )
    }

    /// Number of words a tuple of this relation occupies.
    pub fn width(&self) -> u64 {
        self.scheme.len() as u64
    }
}

/// Joins a set of relations after reducing them to pairwise consistency.
/// Relations are joined greedily, always picking the one sharing the most
/// attributes with what has been joined so far.
pub fn join_all(mut rels: Vec<Relation>) -> Relation {
    if rels.is_empty() {
        return Relation::new(AttrSet::empty(), vec![vec![]]).unwrap();
    }
    semi_join_fixpoint(&mut rels);
    if rels.iter().any(Relation::is_empty) {
        let scheme = rels.iter().fold(AttrSet::empty(), |s, r| s.union(r.scheme()));
        return Relation::empty(scheme);
    }
    let mut acc = rels.remove(0);
    while !rels.is_empty() {
        let best = (0..rels.len())
            .max_by_key(|&i| (rels[i].scheme().intersection(acc.scheme()).len(), std::cmp::Reverse(i)))
            .unwrap();
        let next = rels.remove(best);
        acc = acc.natural_join(&next);
    }
    acc
}

fn semi_join_fixpoint(rels: &mut [Relation]) {
    loop {
        let mut changed = false;
        for i in 0..rels.len() {
            for j in 0..rels.len() {
                if i == j || rels[i].scheme().intersection(rels[j].scheme()).is_empty() {
                    continue;
                }
                let reduced = rels[i].semi_join(&rels[j]);
                if reduced.len() != rels[i].len() {
                    rels[i] = reduced;
                    changed = true;
                }
            }
        }
        if !changed {
            return;
        }
    }
}

/// A join query: one relation per hyperedge.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Instance {
    graph: Hypergraph,
    relations: BTreeMap<EdgeId, Relation>,
}

impl Instance {
    pub fn new(graph: Hypergraph, relations: BTreeMap<EdgeId, Relation>) -> Result<Self> {
        for e in graph.edges() {
            let r = relations
                .get(&e.id)
                .ok_or_else(|| Error::Precondition(format!("no relation for hyperedge {}", e.name)))?;
            if r.scheme() != e.attrs {
                return Err(Error::Precondition(format!("relation scheme does not match hyperedge {}", e.name)));
            }
        }
        if relations.len() != graph.num_edges() {
            return Err(Error::Precondition("relations for unknown hyperedges".into()));
        }
        Ok(Instance { graph, relations })
    }

    pub fn graph(&self) -> &Hypergraph {
        &self.graph
    }

    pub fn relation(&self, e: EdgeId) -> &Relation {
        &self.relations[&e]
    }

    pub fn relations(&self) -> &BTreeMap<EdgeId, Relation> {
        &self.relations
    }

    pub fn sizes(&self) -> BTreeMap<EdgeId, u64> {
        self.relations.iter().map(|(&e, r)| (e, r.len() as u64)).collect()
    }

    /// Total number of tuples, m.
    pub fn input_size(&self) -> u64 {
        self.relations.values().map(|r| r.len() as u64).sum()
    }

    pub(crate) fn semi_join_into(&mut self, big: EdgeId, small: EdgeId) -> Result<()> {
        let s = self.relations.get(&small).ok_or(Error::UnknownEdge(small))?.clone();
        let b = self.relations.get_mut(&big).ok_or(Error::UnknownEdge(big))?;
        if !s.scheme().is_subset(b.scheme()) {
            return Err(Error::Precondition(format!("scheme of {small} is not contained in {big}")));
        }
        *b = b.semi_join(&s);
        Ok(())
    }

    pub(crate) fn remove_relation(&mut self, e: EdgeId) {
        self.relations.remove(&e);
    }

    /// Re-targets the instance to `graph`, dropping relations of edges it lacks.
    pub fn with_graph(mut self, graph: Hypergraph) -> Result<Self> {
        self.relations.retain(|e, _| graph.contains_edge(*e));
        Instance::new(graph, self.relations)
    }
}
