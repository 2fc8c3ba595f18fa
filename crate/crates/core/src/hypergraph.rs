//! Attributes, hyperedges, acyclic hypergraphs and rooted hyperedge trees.
//!
//! Hyperedge ids are stable: every derived hypergraph (attribute removal,
//! cleansing, decomposition) keeps the ids of the hyperedges it retains, so a
//! derived edge can always be traced back to the edge it came from.

use std::collections::{BTreeMap, BTreeSet, VecDeque};
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::relation::Instance;

pub type AttrId = usize;
pub type EdgeId = usize;

/// Maximum number of attributes a hypergraph may carry.
pub const MAX_ATTRS: usize = 64;

/// A set of attribute ids stored as a 64-bit mask.
#[derive(Clone, Copy, Default, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct AttrSet(u64);

impl AttrSet {
    pub const fn empty() -> Self {
        AttrSet(0)
    }

    pub fn singleton(a: AttrId) -> Self {
        debug_assert!(a < MAX_ATTRS);
        AttrSet(1 << a)
    }

    pub fn from_ids<I: IntoIterator<Item = AttrId>>(ids: I) -> Self {
        ids.into_iter().fold(AttrSet::empty(), |s, a| s.with(a))
    }

    pub const fn bits(self) -> u64 {
        self.0
    }

    pub fn contains(self, a: AttrId) -> bool {
        a < MAX_ATTRS && self.0 & (1 << a) != 0
    }

    #[must_use]
    pub fn with(self, a: AttrId) -> Self {
        AttrSet(self.0 | (1 << a))
    }

    #[must_use]
    pub fn without(self, a: AttrId) -> Self {
        AttrSet(self.0 & !(1 << a))
    }

    #[must_use]
    pub fn union(self, other: Self) -> Self {
        AttrSet(self.0 | other.0)
    }

    #[must_use]
    pub fn intersection(self, other: Self) -> Self {
        AttrSet(self.0 & other.0)
    }

    #[must_use]
    pub fn difference(self, other: Self) -> Self {
        AttrSet(self.0 & !other.0)
    }

    pub fn is_subset(self, other: Self) -> bool {
        self.0 & !other.0 == 0
    }

    pub fn is_empty(self) -> bool {
        self.0 == 0
    }

    pub fn len(self) -> usize {
        self.0.count_ones() as usize
    }

    /// Ids in ascending order.
    pub fn iter(self) -> impl Iterator<Item = AttrId> {
        let mut bits = self.0;
        std::iter::from_fn(move || {
            if bits == 0 {
                None
            } else {
                let a = bits.trailing_zeros() as usize;
                bits &= bits - 1;
                Some(a)
            }
        })
    }

    /// Position of `a` among the members, i.e. its column in a tuple over this set.
    pub fn position(self, a: AttrId) -> Option<usize> {
        if !self.contains(a) {
            return None;
        }
        Some((self.0 & ((1u64 << a) - 1)).count_ones() as usize)
    }

    pub fn first(self) -> Option<AttrId> {
        self.iter().next()
    }
}

impl fmt::Debug for AttrSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_set().entries(self.iter()).finish()
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Attribute {
    pub id: AttrId,
    pub name: String,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Hyperedge {
    pub id: EdgeId,
    /// Label of the relation this hyperedge is the scheme of.
    pub name: String,
    pub attrs: AttrSet,
}

/// The shape of a join query: attributes plus a multiset of hyperedges.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Hypergraph {
    attributes: Vec<Attribute>,
    /// Sorted by id.
    edges: Vec<Hyperedge>,
}

impl Hypergraph {
    /// Builds a hypergraph from attribute names and (edge name, attribute names) pairs.
    /// Edge ids are assigned densely in the given order.
    pub fn new<S: AsRef<str>>(attribute_names: &[S], edges: &[(String, Vec<String>)]) -> Result<Self> {
        if attribute_names.len() > MAX_ATTRS {
            return Err(Error::InvalidHypergraph(format!(
                "{} attributes exceed the limit of {MAX_ATTRS}",
                attribute_names.len()
            )));
        }
        let mut attributes = Vec::with_capacity(attribute_names.len());
        for (id, name) in attribute_names.iter().enumerate() {
            let name = name.as_ref();
            if name.is_empty() {
                return Err(Error::InvalidHypergraph("empty attribute name".into()));
            }
            if attributes.iter().any(|a: &Attribute| a.name == name) {
                return Err(Error::InvalidHypergraph(format!("duplicate attribute `{name}`")));
            }
            attributes.push(Attribute { id, name: name.to_string() });
        }
        let mut out = Vec::with_capacity(edges.len());
        for (id, (name, attrs)) in edges.iter().enumerate() {
            let mut set = AttrSet::empty();
            for a in attrs {
                let attr = attributes
                    .iter()
                    .find(|x| &x.name == a)
                    .ok_or_else(|| Error::UnknownAttribute(a.clone()))?;
                set = set.with(attr.id);
            }
            out.push(Hyperedge { id, name: name.clone(), attrs: set });
        }
        Self::from_parts(attributes, out)
    }

    /// Shorthand for single-character attribute names: `from_schemes(&["ABC", "BD"])`.
    /// Attributes are ordered by first appearance; edge names are the scheme strings.
    pub fn from_schemes(schemes: &[&str]) -> Result<Self> {
        let mut names: Vec<String> = Vec::new();
        for s in schemes {
            for c in s.chars() {
                let c = c.to_string();
                if !names.contains(&c) {
                    names.push(c);
                }
            }
        }
        let edges: Vec<(String, Vec<String>)> = schemes
            .iter()
            .map(|s| (s.to_string(), s.chars().map(|c| c.to_string()).collect()))
            .collect();
        Self::new(&names, &edges)
    }

    pub fn from_parts(attributes: Vec<Attribute>, mut edges: Vec<Hyperedge>) -> Result<Self> {
        if edges.is_empty() {
            return Err(Error::InvalidHypergraph("a hypergraph needs at least one hyperedge".into()));
        }
        edges.sort_by_key(|e| e.id);
        if edges.windows(2).any(|w| w[0].id == w[1].id) {
            return Err(Error::InvalidHypergraph("duplicate hyperedge id".into()));
        }
        let universe = AttrSet::from_ids(0..attributes.len());
        if let Some(e) = edges.iter().find(|e| !e.attrs.is_subset(universe)) {
            return Err(Error::InvalidHypergraph(format!("hyperedge {} references an undeclared attribute", e.id)));
        }
        Ok(Hypergraph { attributes, edges })
    }

    pub fn attributes(&self) -> &[Attribute] {
        &self.attributes
    }

    pub fn attribute_name(&self, a: AttrId) -> &str {
        &self.attributes[a].name
    }

    pub fn attribute_id(&self, name: &str) -> Option<AttrId> {
        self.attributes.iter().find(|a| a.name == name).map(|a| a.id)
    }

    pub fn edges(&self) -> &[Hyperedge] {
        &self.edges
    }

    pub fn edge_ids(&self) -> impl Iterator<Item = EdgeId> + '_ {
        self.edges.iter().map(|e| e.id)
    }

    pub fn num_edges(&self) -> usize {
        self.edges.len()
    }

    pub fn contains_edge(&self, id: EdgeId) -> bool {
        self.edges.binary_search_by_key(&id, |e| e.id).is_ok()
    }

    pub fn edge(&self, id: EdgeId) -> Result<&Hyperedge> {
        self.edges
            .binary_search_by_key(&id, |e| e.id)
            .map(|i| &self.edges[i])
            .map_err(|_| Error::UnknownEdge(id))
    }

    /// Attribute set of edge `id`. Panics if the edge is absent.
    pub fn attrs(&self, id: EdgeId) -> AttrSet {
        self.edge(id).expect("edge id belongs to this hypergraph").attrs
    }

    pub fn edge_name(&self, id: EdgeId) -> &str {
        &self.edge(id).expect("edge id belongs to this hypergraph").name
    }

    pub fn edge_by_name(&self, name: &str) -> Option<EdgeId> {
        self.edges.iter().find(|e| e.name == name).map(|e| e.id)
    }

    /// The participating attributes: those occurring in at least one hyperedge.
    pub fn vertex_set(&self) -> AttrSet {
        self.edges.iter().fold(AttrSet::empty(), |s, e| s.union(e.attrs))
    }

    /// Renders an attribute set with this hypergraph's names, e.g. `CEJ` or `{HK,X}`.
    pub fn format_attrs(&self, s: AttrSet) -> String {
        let names: Vec<&str> = s.iter().map(|a| self.attribute_name(a)).collect();
        if names.iter().all(|n| n.chars().count() == 1) {
            names.concat()
        } else {
            format!("{{{}}}", names.join(","))
        }
    }

    /// Edges whose attribute set is a subset of some other edge.
    pub fn subsumed_edges(&self) -> Vec<EdgeId> {
        self.edges
            .iter()
            .filter(|e| self.edges.iter().any(|o| o.id != e.id && e.attrs.is_subset(o.attrs)))
            .map(|e| e.id)
            .collect()
    }

    pub fn is_subsumed(&self, id: EdgeId) -> bool {
        let a = self.attrs(id);
        self.edges.iter().any(|o| o.id != id && a.is_subset(o.attrs))
    }

    pub fn is_clean(&self) -> bool {
        self.subsumed_edges().is_empty()
    }

    /// The same hypergraph restricted to `keep`, which must be nonempty.
    pub fn restrict(&self, keep: &BTreeSet<EdgeId>) -> Result<Self> {
        let edges = self.edges.iter().filter(|e| keep.contains(&e.id)).cloned().collect();
        Self::from_parts(self.attributes.clone(), edges)
    }

    /// The residual hypergraph with attribute `a` removed from every edge.
    pub fn without_attribute(&self, a: AttrId) -> Self {
        let edges = self
            .edges
            .iter()
            .map(|e| Hyperedge { id: e.id, name: e.name.clone(), attrs: e.attrs.without(a) })
            .collect();
        Hypergraph { attributes: self.attributes.clone(), edges }
    }

    fn remove_edge(&mut self, id: EdgeId) {
        self.edges.retain(|e| e.id != id);
    }
}

/// A rooted hyperedge tree (join tree). Children lists are kept in ascending id order.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct HyperedgeTree {
    graph: Hypergraph,
    root: EdgeId,
    parent: BTreeMap<EdgeId, Option<EdgeId>>,
    children: BTreeMap<EdgeId, Vec<EdgeId>>,
}

impl HyperedgeTree {
    /// Builds a tree from a parent map that must mention every edge exactly once.
    /// Only the structure is checked here; see [`validate_tree`] for connectedness.
    pub fn from_parents(graph: Hypergraph, parent: BTreeMap<EdgeId, Option<EdgeId>>) -> Result<Self> {
        let ids: BTreeSet<EdgeId> = graph.edge_ids().collect();
        let keys: BTreeSet<EdgeId> = parent.keys().copied().collect();
        if ids != keys {
            return Err(Error::InvalidTree("parent map does not cover exactly the hyperedges".into()));
        }
        let roots: Vec<EdgeId> = parent.iter().filter(|(_, p)| p.is_none()).map(|(&e, _)| e).collect();
        if roots.len() != 1 {
            return Err(Error::InvalidTree(format!("expected one root, found {}", roots.len())));
        }
        let mut children: BTreeMap<EdgeId, Vec<EdgeId>> = ids.iter().map(|&e| (e, Vec::new())).collect();
        for (&e, p) in &parent {
            if let Some(p) = p {
                if !ids.contains(p) {
                    return Err(Error::InvalidTree(format!("parent {p} of {e} is not a hyperedge")));
                }
                if *p == e {
                    return Err(Error::InvalidTree(format!("{e} is its own parent")));
                }
                children.get_mut(p).unwrap().push(e);
            }
        }
        for c in children.values_mut() {
            c.sort_unstable();
        }
        let tree = HyperedgeTree { graph, root: roots[0], parent, children };
        if tree.preorder().len() != ids.len() {
            return Err(Error::InvalidTree("parent map contains a cycle".into()));
        }
        Ok(tree)
    }

    /// Builds a tree from a parent array indexed by position in `graph.edges()`.
    pub fn from_parent_array(graph: Hypergraph, parents: &[Option<usize>]) -> Result<Self> {
        if parents.len() != graph.num_edges() {
            return Err(Error::InvalidTree(format!(
                "parent array has {} entries for {} hyperedges",
                parents.len(),
                graph.num_edges()
            )));
        }
        let ids: Vec<EdgeId> = graph.edge_ids().collect();
        let mut map = BTreeMap::new();
        for (i, p) in parents.iter().enumerate() {
            let p = match p {
                Some(j) => Some(*ids.get(*j).ok_or_else(|| Error::InvalidTree(format!("parent index {j} out of range")))?),
                None => None,
            };
            map.insert(ids[i], p);
        }
        Self::from_parents(graph, map)
    }

    /// Parent array indexed by position in `graph().edges()`, the inverse of
    /// [`HyperedgeTree::from_parent_array`].
    pub fn parent_array(&self) -> Vec<Option<usize>> {
        let ids: Vec<EdgeId> = self.graph.edge_ids().collect();
        ids.iter()
            .map(|e| self.parent[e].map(|p| ids.binary_search(&p).unwrap()))
            .collect()
    }

    pub fn graph(&self) -> &Hypergraph {
        &self.graph
    }

    pub fn root(&self) -> EdgeId {
        self.root
    }

    pub fn len(&self) -> usize {
        self.graph.num_edges()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn parent(&self, e: EdgeId) -> Option<EdgeId> {
        self.parent.get(&e).copied().flatten()
    }

    pub fn children(&self, e: EdgeId) -> &[EdgeId] {
        self.children.get(&e).map(Vec::as_slice).unwrap_or(&[])
    }

    pub fn parents(&self) -> &BTreeMap<EdgeId, Option<EdgeId>> {
        &self.parent
    }

    pub fn attrs(&self, e: EdgeId) -> AttrSet {
        self.graph.attrs(e)
    }

    pub fn contains(&self, e: EdgeId) -> bool {
        self.parent.contains_key(&e)
    }

    /// A leaf in the directed view: no children.
    pub fn is_leaf(&self, e: EdgeId) -> bool {
        self.children(e).is_empty()
    }

    /// A leaf of the undirected tree: degree at most one.
    pub fn is_raw_leaf(&self, e: EdgeId) -> bool {
        let degree = self.children(e).len() + usize::from(self.parent(e).is_some());
        degree <= 1
    }

    pub fn raw_leaves(&self) -> Vec<EdgeId> {
        self.graph.edge_ids().filter(|&e| self.is_raw_leaf(e)).collect()
    }

    pub fn preorder(&self) -> Vec<EdgeId> {
        let mut out = Vec::with_capacity(self.parent.len());
        let mut stack = vec![self.root];
        while let Some(e) = stack.pop() {
            if out.len() > self.parent.len() {
                break;
            }
            out.push(e);
            for &c in self.children(e).iter().rev() {
                stack.push(c);
            }
        }
        out
    }

    /// Post-order DFS visiting children in ascending id order: a reverse topological order.
    pub fn postorder(&self) -> Vec<EdgeId> {
        let mut out = Vec::with_capacity(self.parent.len());
        let mut stack = vec![(self.root, false)];
        while let Some((e, expanded)) = stack.pop() {
            if expanded {
                out.push(e);
            } else {
                stack.push((e, true));
                for &c in self.children(e).iter().rev() {
                    stack.push((c, false));
                }
            }
        }
        out
    }

    pub fn depth(&self, e: EdgeId) -> usize {
        let mut d = 0;
        let mut cur = e;
        while let Some(p) = self.parent(cur) {
            d += 1;
            cur = p;
        }
        d
    }

    /// Proper ancestors of `e`, nearest first.
    pub fn ancestors(&self, e: EdgeId) -> Vec<EdgeId> {
        let mut out = Vec::new();
        let mut cur = e;
        while let Some(p) = self.parent(cur) {
            out.push(p);
            cur = p;
        }
        out
    }

    pub fn is_ancestor_or_self(&self, anc: EdgeId, e: EdgeId) -> bool {
        anc == e || self.ancestors(e).contains(&anc)
    }

    /// Nodes of the subtree rooted at `e`, in preorder.
    pub fn subtree(&self, e: EdgeId) -> Vec<EdgeId> {
        let mut out = Vec::new();
        let mut stack = vec![e];
        while let Some(x) = stack.pop() {
            out.push(x);
            for &c in self.children(x).iter().rev() {
                stack.push(c);
            }
        }
        out
    }

    /// Same shape, attribute `a` dropped from every node.
    pub fn without_attribute(&self, a: AttrId) -> Self {
        HyperedgeTree {
            graph: self.graph.without_attribute(a),
            root: self.root,
            parent: self.parent.clone(),
            children: self.children.clone(),
        }
    }

    /// The tree induced on `nodes`, rooted at `root`, with the given parent links.
    pub(crate) fn induced(&self, root: EdgeId, parent: BTreeMap<EdgeId, Option<EdgeId>>) -> Result<Self> {
        debug_assert_eq!(parent.get(&root), Some(&None));
        let keep: BTreeSet<EdgeId> = parent.keys().copied().collect();
        let graph = self.graph.restrict(&keep)?;
        Self::from_parents(graph, parent)
    }

    /// Removes `small`, which must be linked to `big`, and reattaches its
    /// neighbours to `big`.
    pub fn contract_link(&mut self, small: EdgeId, big: EdgeId) -> Result<()> {
        if self.parent(small) == Some(big) {
            let grandchildren = self.children.remove(&small).unwrap_or_default();
            let kids = self.children.get_mut(&big).unwrap();
            kids.retain(|&c| c != small);
            kids.extend(grandchildren.iter().copied());
            kids.sort_unstable();
            for c in grandchildren {
                self.parent.insert(c, Some(big));
            }
        } else if self.parent(big) == Some(small) {
            let up = self.parent(small);
            let others: Vec<EdgeId> = self.children.remove(&small).unwrap_or_default().into_iter().filter(|&c| c != big).collect();
            self.parent.insert(big, up);
            match up {
                Some(u) => {
                    let kids = self.children.get_mut(&u).unwrap();
                    kids.retain(|&c| c != small);
                    kids.push(big);
                    kids.sort_unstable();
                }
                None => self.root = big,
            }
            let kids = self.children.get_mut(&big).unwrap();
            kids.extend(others.iter().copied());
            kids.sort_unstable();
            for c in others {
                self.parent.insert(c, Some(big));
            }
        } else {
            return Err(Error::InvalidTree(format!("{small} and {big} are not linked")));
        }
        self.parent.remove(&small);
        self.graph.remove_edge(small);
        Ok(())
    }

    /// Finds the first link (in preorder of the child) joining two nodes one of
    /// which is a subset of the other. Returns `(small, big)`; for identical
    /// schemes the higher id is the one removed.
    pub fn find_subsumed_link(&self) -> Option<(EdgeId, EdgeId)> {
        for c in self.preorder() {
            let Some(q) = self.parent(c) else { continue };
            let (ac, aq) = (self.attrs(c), self.attrs(q));
            if ac == aq {
                return Some(if c > q { (c, q) } else { (q, c) });
            }
            if ac.is_subset(aq) {
                return Some((c, q));
            }
            if aq.is_subset(ac) {
                return Some((q, c));
            }
        }
        None
    }

    /// Contracts subsumed links until none remain; returns the `(small, big)` removals in order.
    pub fn cleaning_plan(&self) -> (HyperedgeTree, Vec<(EdgeId, EdgeId)>) {
        let mut t = self.clone();
        let mut plan = Vec::new();
        while t.len() > 1 {
            let Some((small, big)) = t.find_subsumed_link() else { break };
            t.contract_link(small, big).expect("link found in this tree");
            plan.push((small, big));
        }
        // Contracting the root can leave an inner node on top; the cover
        // machinery expects the root to be a raw leaf.
        if !t.is_raw_leaf(t.root()) {
            let leaf = t.raw_leaves()[0];
            t = t.rerooted(leaf);
        }
        (t, plan)
    }

    /// The same undirected tree hung from `root`.
    pub fn rerooted(&self, root: EdgeId) -> Self {
        let mut parent = BTreeMap::new();
        parent.insert(root, None);
        let mut queue = VecDeque::from([root]);
        while let Some(x) = queue.pop_front() {
            let near = self.children(x).iter().copied().chain(self.parent(x));
            for y in near.collect::<Vec<_>>() {
                if !parent.contains_key(&y) {
                    parent.insert(y, Some(x));
                    queue.push_back(y);
                }
            }
        }
        Self::from_parents(self.graph.clone(), parent).expect("re-rooting keeps a tree")
    }
}

/// Builds a join tree by GYO ear elimination with lowest-id tie-breaking.
/// Returns `None` if the hypergraph is cyclic. The tree is rooted at its
/// lowest-id raw leaf.
pub fn build_join_tree(g: &Hypergraph) -> Option<HyperedgeTree> {
    let mut remaining: Vec<EdgeId> = g.edge_ids().collect();
    let mut links: Vec<(EdgeId, EdgeId)> = Vec::new();
    while remaining.len() > 1 {
        let mut ear = None;
        'search: for (i, &e) in remaining.iter().enumerate() {
            let others = remaining
                .iter()
                .enumerate()
                .filter(|&(j, _)| j != i)
                .fold(AttrSet::empty(), |s, (_, &o)| s.union(g.attrs(o)));
            let shared = g.attrs(e).intersection(others);
            for &w in &remaining {
                if w != e && shared.is_subset(g.attrs(w)) {
                    ear = Some((i, e, w));
                    break 'search;
                }
            }
        }
        let (i, e, w) = ear?;
        links.push((e, w));
        remaining.remove(i);
    }

    let mut adj: BTreeMap<EdgeId, Vec<EdgeId>> = g.edge_ids().map(|e| (e, Vec::new())).collect();
    for &(a, b) in &links {
        adj.get_mut(&a).unwrap().push(b);
        adj.get_mut(&b).unwrap().push(a);
    }
    let root = *adj.iter().find(|(_, n)| n.len() <= 1).map(|(e, _)| e)?;
    let mut parent = BTreeMap::new();
    parent.insert(root, None);
    let mut queue = VecDeque::from([root]);
    while let Some(x) = queue.pop_front() {
        for &y in &adj[&x] {
            if !parent.contains_key(&y) {
                parent.insert(y, Some(x));
                queue.push_back(y);
            }
        }
    }
    HyperedgeTree::from_parents(g.clone(), parent).ok()
}

/// True iff every attribute's nodes form a connected subtree of `t`.
///
/// A node set of a rooted tree is connected iff exactly one of its members
/// has a parent outside the set.
pub fn validate_tree(t: &HyperedgeTree) -> bool {
    for a in t.graph().vertex_set().iter() {
        let tops = t
            .graph()
            .edge_ids()
            .filter(|&e| t.attrs(e).contains(a))
            .filter(|&e| t.parent(e).is_none_or(|p| !t.attrs(p).contains(a)))
            .count();
        if tops != 1 {
            return false;
        }
    }
    true
}

/// The highest node containing `x`.
pub fn summit(t: &HyperedgeTree, x: AttrId) -> Result<EdgeId> {
    t.graph()
        .edge_ids()
        .filter(|&e| t.attrs(e).contains(x))
        .min_by_key(|&e| (t.depth(e), e))
        .ok_or(Error::AttributeAbsent(x))
}

/// Attributes of `e` whose summit is `e`.
pub fn disappearing_attrs(t: &HyperedgeTree, e: EdgeId) -> AttrSet {
    let own = t.attrs(e);
    match t.parent(e) {
        // In a valid tree an attribute disappears at e iff the parent lacks it.
        Some(p) => own.difference(t.attrs(p)),
        None => own,
    }
}

/// Removes subsumed hyperedges. Each removed relation is first semi-joined
/// into the neighbour that subsumes it, so the join result is unchanged.
pub fn clean(g: &Hypergraph, t: &HyperedgeTree, q: &Instance) -> Result<(Hypergraph, HyperedgeTree, Instance)> {
    if t.graph() != g {
        return Err(Error::Precondition("tree is not built over the given hypergraph".into()));
    }
    let (tree, plan) = t.cleaning_plan();
    let mut inst = q.clone();
    for (small, big) in plan {
        inst.semi_join_into(big, small)?;
        inst.remove_relation(small);
    }
    let inst = inst.with_graph(tree.graph().clone())?;
    Ok((tree.graph().clone(), tree, inst))
}
