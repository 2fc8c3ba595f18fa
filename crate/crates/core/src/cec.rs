//! Canonical edge covers and the structures derived from them.
//!
//! The cover is produced by a single bottom-up pass: a node joins the cover
//! when one of its disappearing attributes is not yet covered. Everything
//! else here (signature paths, anchors, attribute removal, cleansing and
//! decomposition) is phrased in terms of that cover, and each operation
//! re-derives the cover of its output tree to confirm the carried-forward
//! cover is still canonical.

use std::collections::{BTreeMap, BTreeSet};

use serde::Serialize;

use crate::error::{Error, Result};
use crate::hypergraph::{disappearing_attrs, AttrId, AttrSet, EdgeId, HyperedgeTree};

/// A canonical edge cover F together with the tree that induced it.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Cec {
    tree: HyperedgeTree,
    members: BTreeSet<EdgeId>,
}

impl Cec {
    pub fn tree(&self) -> &HyperedgeTree {
        &self.tree
    }

    pub fn members(&self) -> &BTreeSet<EdgeId> {
        &self.members
    }

    pub fn contains(&self, e: EdgeId) -> bool {
        self.members.contains(&e)
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    /// Lowest proper ancestor of `e` that is in the cover.
    pub fn cover_ancestor(&self, e: EdgeId) -> Option<EdgeId> {
        self.tree.ancestors(e).into_iter().find(|a| self.contains(*a))
    }

    /// Attributes covered by the members.
    pub fn covered(&self) -> AttrSet {
        self.members.iter().fold(AttrSet::empty(), |s, &e| s.union(self.tree.attrs(e)))
    }

    pub fn signature_path(&self, f: EdgeId) -> Result<SignaturePath> {
        if !self.contains(self.tree.root()) {
            return Err(Error::RootNotInCover);
        }
        if !self.contains(f) {
            return Err(Error::Precondition(format!("edge {f} is not in the cover")));
        }
        let mut nodes = vec![f];
        let mut cur = f;
        while let Some(p) = self.tree.parent(cur) {
            if self.contains(p) {
                break;
            }
            nodes.push(p);
            cur = p;
        }
        nodes.reverse();
        Ok(SignaturePath { owner: f, nodes })
    }

    pub(crate) fn from_members(tree: HyperedgeTree, members: BTreeSet<EdgeId>) -> Self {
        Cec { tree, members }
    }
}

/// The path from just below the lowest proper cover ancestor of `owner` down to `owner`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct SignaturePath {
    pub owner: EdgeId,
    /// Highest node first; the last element is `owner`.
    pub nodes: Vec<EdgeId>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Cluster {
    /// Cover member that owns the cluster, for clusterings built from signature paths.
    pub owner: Option<EdgeId>,
    pub edges: Vec<EdgeId>,
    /// Whether this is the cluster of the tree root.
    pub is_root: bool,
}

/// A clustering of E: a list of clusters whose union is E. Clusters may overlap.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Clustering {
    pub clusters: Vec<Cluster>,
}

impl Clustering {
    /// A clustering without owners, e.g. for hand-built examples.
    pub fn from_sets(sets: Vec<Vec<EdgeId>>) -> Result<Self> {
        if sets.iter().any(Vec::is_empty) {
            return Err(Error::Precondition("clusters must be nonempty".into()));
        }
        Ok(Clustering {
            clusters: sets.into_iter().map(|edges| Cluster { owner: None, edges, is_root: false }).collect(),
        })
    }

    pub fn len(&self) -> usize {
        self.clusters.len()
    }

    pub fn is_empty(&self) -> bool {
        self.clusters.is_empty()
    }

    pub fn union(&self) -> BTreeSet<EdgeId> {
        self.clusters.iter().flat_map(|c| c.edges.iter().copied()).collect()
    }

    /// Clusters as sorted sets, in a canonical order, for comparisons.
    pub fn as_sets(&self) -> BTreeSet<BTreeSet<EdgeId>> {
        self.clusters.iter().map(|c| c.edges.iter().copied().collect()).collect()
    }

    pub fn root_cluster(&self) -> Option<usize> {
        self.clusters.iter().position(|c| c.is_root)
    }
}

/// Runs the cover procedure over post-order DFS (children in ascending id order).
pub fn edge_cover(t: &HyperedgeTree) -> Cec {
    let order = t.postorder();
    cover_in_order(t, &order)
}

/// Runs the cover procedure over a caller-supplied reverse topological order.
pub fn edge_cover_with_order(t: &HyperedgeTree, order: &[EdgeId]) -> Result<Cec> {
    if !is_reverse_topological(t, order) {
        return Err(Error::Precondition("not a reverse topological order of the tree".into()));
    }
    Ok(cover_in_order(t, order))
}

fn cover_in_order(t: &HyperedgeTree, order: &[EdgeId]) -> Cec {
    let mut members = BTreeSet::new();
    let mut covered = AttrSet::empty();
    for &e in order {
        if !disappearing_attrs(t, e).is_subset(covered) {
            members.insert(e);
            covered = covered.union(t.attrs(e));
        }
    }
    Cec { tree: t.clone(), members }
}

/// Every node appears once and after all of its descendants.
pub fn is_reverse_topological(t: &HyperedgeTree, order: &[EdgeId]) -> bool {
    if order.len() != t.len() {
        return false;
    }
    let pos: BTreeMap<EdgeId, usize> = order.iter().enumerate().map(|(i, &e)| (e, i)).collect();
    if pos.len() != order.len() || !order.iter().all(|&e| t.contains(e)) {
        return false;
    }
    order.iter().all(|&e| t.parent(e).is_none_or(|p| pos[&p] > pos[&e]))
}

/// One cluster per cover member: its signature path.
pub fn signature_paths(f: &Cec) -> Result<Clustering> {
    let root = f.tree.root();
    let clusters = f
        .members
        .iter()
        .map(|&m| {
            f.signature_path(m).map(|p| Cluster { owner: Some(m), edges: p.nodes, is_root: m == root })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(Clustering { clusters })
}

/// A leaf f° of the cover with an attribute A° shared by its whole signature
/// path but absent from f̂, the lowest cover ancestor of f°.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct Anchor {
    pub leaf: EdgeId,
    pub attribute: AttrId,
    pub fhat: EdgeId,
}

/// Returns the anchor with leaf `leaf` and the lowest qualifying attribute, if `leaf` is an anchor leaf.
pub fn anchor_for_leaf(f: &Cec, leaf: EdgeId) -> Option<Anchor> {
    let t = &f.tree;
    if !f.contains(leaf) || !t.is_leaf(leaf) {
        return None;
    }
    let fhat = f.cover_ancestor(leaf)?;
    if has_nonleaf_cover_descendant(f, fhat) {
        return None;
    }
    let path = f.signature_path(leaf).ok()?;
    let shared = path.nodes.iter().fold(t.attrs(leaf), |s, &e| s.intersection(t.attrs(e)));
    let attribute = shared.difference(t.attrs(fhat)).first()?;
    Some(Anchor { leaf, attribute, fhat })
}

/// Whether (`leaf`, `attr`) satisfies every anchor condition.
pub fn is_anchor(f: &Cec, leaf: EdgeId, attr: AttrId) -> bool {
    let t = &f.tree;
    if !f.contains(leaf) || !t.is_leaf(leaf) {
        return false;
    }
    let Some(fhat) = f.cover_ancestor(leaf) else { return false };
    if has_nonleaf_cover_descendant(f, fhat) || t.attrs(fhat).contains(attr) {
        return false;
    }
    match f.signature_path(leaf) {
        Ok(p) => p.nodes.iter().all(|&e| t.attrs(e).contains(attr)),
        Err(_) => false,
    }
}

fn has_nonleaf_cover_descendant(f: &Cec, e: EdgeId) -> bool {
    let t = &f.tree;
    t.subtree(e).into_iter().skip(1).any(|d| f.contains(d) && !t.is_leaf(d))
}

/// Finds an anchor constructively: take the lowest-id non-leaf cover node f̂
/// with no non-leaf cover descendant, its lowest-id child e, the lowest
/// attribute of e missing from f̂, and the lowest-id cover node holding it.
pub fn find_anchor(f: &Cec) -> Result<Anchor> {
    let t = &f.tree;
    if t.len() < 2 {
        return Err(Error::Precondition("anchors need at least two hyperedges".into()));
    }
    if !t.graph().is_clean() {
        return Err(Error::NotClean("anchor leaves are defined for clean hypergraphs only".into()));
    }
    if !f.contains(t.root()) {
        return Err(Error::RootNotInCover);
    }
    let fhat = f
        .members
        .iter()
        .copied()
        .find(|&m| !t.is_leaf(m) && !has_nonleaf_cover_descendant(f, m))
        .ok_or_else(|| Error::InvariantViolation("no non-leaf cover node found".into()))?;
    for &e in t.children(fhat) {
        let Some(attribute) = t.attrs(e).difference(t.attrs(fhat)).first() else { continue };
        let leaf = t
            .subtree(e)
            .into_iter()
            .filter(|&d| f.contains(d) && t.attrs(d).contains(attribute))
            .min()
            .ok_or_else(|| Error::InvariantViolation("anchor attribute is not covered".into()))?;
        let anchor = Anchor { leaf, attribute, fhat };
        if !is_anchor(f, leaf, attribute) {
            return Err(Error::InvariantViolation(format!("constructed anchor {anchor:?} is invalid")));
        }
        return Ok(anchor);
    }
    Err(Error::InvariantViolation("every child of the anchor parent is subsumed".into()))
}

/// Bijection between surviving hyperedges of a derived hypergraph and the
/// original. Ids are stable, so surviving entries map an id to itself.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize)]
pub struct ResidualMap {
    pub forward: BTreeMap<EdgeId, EdgeId>,
    pub inverse: BTreeMap<EdgeId, EdgeId>,
}

impl ResidualMap {
    pub fn identity<I: IntoIterator<Item = EdgeId>>(ids: I) -> Self {
        let forward: BTreeMap<_, _> = ids.into_iter().map(|e| (e, e)).collect();
        ResidualMap { inverse: forward.clone(), forward }
    }

    /// Drops the derived edge `e` and its preimage.
    pub fn remove_derived(&mut self, e: EdgeId) {
        if let Some(orig) = self.inverse.remove(&e) {
            self.forward.remove(&orig);
        }
    }

    pub fn map(&self, e: EdgeId) -> Option<EdgeId> {
        self.forward.get(&e).copied()
    }

    pub fn unmap(&self, e: EdgeId) -> Option<EdgeId> {
        self.inverse.get(&e).copied()
    }
}

/// Output of removing the anchor attribute.
#[derive(Clone, Debug)]
pub struct Residual {
    pub anchor: Anchor,
    /// F' over T', the tree with A° dropped from every node.
    pub cover: Cec,
    pub map: ResidualMap,
    /// Whether map(f°) is subsumed in G'.
    pub leaf_subsumed: bool,
}

impl Residual {
    pub fn tree(&self) -> &HyperedgeTree {
        self.cover.tree()
    }
}

/// Drops A° from every node and carries the cover forward: F minus f° when
/// map(f°) becomes subsumed, otherwise the image of F.
pub fn remove_attribute(f: &Cec, a: &Anchor) -> Result<Residual> {
    if !is_anchor(f, a.leaf, a.attribute) {
        return Err(Error::Precondition(format!("{a:?} is not an anchor")));
    }
    let t_prime = f.tree.without_attribute(a.attribute);
    let g_prime = t_prime.graph();
    let leaf_subsumed = g_prime.is_subsumed(a.leaf);
    let mut members = f.members.clone();
    if leaf_subsumed {
        members.remove(&a.leaf);
        let exclusive = f.tree.graph().edges().iter().filter(|e| e.attrs.contains(a.attribute)).count() == 1;
        if !exclusive {
            return Err(Error::InvariantViolation("map(f°) is subsumed but A° is not exclusive to f°".into()));
        }
    }
    let map = ResidualMap::identity(t_prime.graph().edge_ids());
    let residual = Residual { anchor: *a, cover: Cec::from_members(t_prime, members), map, leaf_subsumed };

    let recomputed = edge_cover(residual.tree());
    if recomputed.members != residual.cover.members {
        return Err(Error::InvariantViolation(format!(
            "carried cover {:?} differs from recomputed cover {:?} after removing A°",
            residual.cover.members, recomputed.members
        )));
    }
    if let Some(e) = residual.tree().graph().subsumed_edges().into_iter().find(|e| residual.cover.contains(*e)) {
        return Err(Error::InvariantViolation(format!("subsumed edge {e} of G' is in F'")));
    }
    Ok(residual)
}

/// Output of cleansing a residual hypergraph.
#[derive(Clone, Debug)]
pub struct Cleansed {
    /// F* over T*.
    pub cover: Cec,
    /// Maps surviving edges of G* back to G.
    pub map: ResidualMap,
    /// `(e_small, e_big)` in removal order; each removed relation is semi-joined into `e_big`.
    pub removals: Vec<(EdgeId, EdgeId)>,
}

impl Cleansed {
    pub fn tree(&self) -> &HyperedgeTree {
        self.cover.tree()
    }
}

/// Converts G' into a clean G*. If map(f°) is subsumed only that leaf is
/// removed; otherwise subsumed links are contracted until none remain.
pub fn cleanse(r: &Residual) -> Result<Cleansed> {
    let mut tree = r.tree().clone();
    let mut map = r.map.clone();
    let mut removals = Vec::new();
    if r.leaf_subsumed {
        let leaf = r.anchor.leaf;
        let parent = tree
            .parent(leaf)
            .ok_or_else(|| Error::InvariantViolation("anchor leaf has no parent".into()))?;
        if !tree.attrs(leaf).is_subset(tree.attrs(parent)) {
            return Err(Error::InvariantViolation("map(f°) is subsumed but not by its parent".into()));
        }
        tree.contract_link(leaf, parent)?;
        map.remove_derived(leaf);
        removals.push((leaf, parent));
    } else {
        while let Some((small, big)) = tree.find_subsumed_link() {
            if r.cover.contains(small) {
                return Err(Error::InvariantViolation(format!("cleanse would remove {small}, which is in F'")));
            }
            tree.contract_link(small, big)?;
            map.remove_derived(small);
            removals.push((small, big));
        }
    }
    if !tree.graph().is_clean() {
        return Err(Error::InvariantViolation("cleansed hypergraph is not clean".into()));
    }
    let members: BTreeSet<EdgeId> = r.cover.members.iter().copied().filter(|e| tree.contains(*e)).collect();
    let cover = Cec::from_members(tree, members);
    let recomputed = edge_cover(cover.tree());
    if recomputed.members != cover.members {
        return Err(Error::InvariantViolation(format!(
            "carried cover {:?} differs from recomputed cover {:?} after cleansing",
            cover.members, recomputed.members
        )));
    }
    Ok(Cleansed { cover, map, removals })
}

/// The signature-path decomposition around an anchor.
#[derive(Clone, Debug)]
pub struct Decomposition {
    pub anchor: Anchor,
    /// sigpath(f°, T), highest node first.
    pub path: Vec<EdgeId>,
    /// Nodes outside the path whose parent is on it, ascending id.
    pub z_set: Vec<EdgeId>,
    /// For each z, F*_z over T*_z (rooted at the parent of z, with z its only child).
    pub subtrees: BTreeMap<EdgeId, Cec>,
    /// F̄* over T̄*: T minus the subtree of the highest path node.
    pub remainder: Option<Cec>,
}

impl Decomposition {
    /// Every generated piece, sub-trees first (ascending z), then the remainder.
    pub fn pieces(&self) -> impl Iterator<Item = &Cec> {
        self.subtrees.values().chain(self.remainder.iter())
    }
}

pub fn decompose(f: &Cec, a: &Anchor) -> Result<Decomposition> {
    let t = &f.tree;
    if !t.graph().is_clean() {
        return Err(Error::NotClean("decomposition needs a clean hypergraph".into()));
    }
    if !is_anchor(f, a.leaf, a.attribute) {
        return Err(Error::Precondition(format!("{a:?} is not an anchor")));
    }
    let path = f.signature_path(a.leaf)?.nodes;
    let on_path: BTreeSet<EdgeId> = path.iter().copied().collect();
    let z_set: Vec<EdgeId> = t
        .graph()
        .edge_ids()
        .filter(|e| !on_path.contains(e) && t.parent(*e).is_some_and(|p| on_path.contains(&p)))
        .collect();

    let mut subtrees = BTreeMap::new();
    for &z in &z_set {
        let top = t.parent(z).unwrap();
        let mut parent = BTreeMap::new();
        parent.insert(top, None);
        for d in t.subtree(z) {
            parent.insert(d, t.parent(d));
        }
        let tz = t.induced(top, parent)?;
        let mut members: BTreeSet<EdgeId> = f.members.iter().copied().filter(|e| tz.contains(*e)).collect();
        members.insert(top);
        subtrees.insert(z, Cec::from_members(tz, members));
    }

    let cut: BTreeSet<EdgeId> = t.subtree(path[0]).into_iter().collect();
    let remainder = if cut.len() == t.len() {
        None
    } else {
        let parent: BTreeMap<EdgeId, Option<EdgeId>> =
            t.parents().iter().filter(|(e, _)| !cut.contains(e)).map(|(&e, &p)| (e, p)).collect();
        let tb = t.induced(t.root(), parent)?;
        let members = f.members.iter().copied().filter(|e| tb.contains(*e)).collect();
        Some(Cec::from_members(tb, members))
    };

    let d = Decomposition { anchor: *a, path, z_set, subtrees, remainder };
    for piece in d.pieces() {
        let recomputed = edge_cover(piece.tree());
        if recomputed.members != piece.members {
            return Err(Error::InvariantViolation(format!(
                "carried cover {:?} differs from recomputed {:?} on a decomposition piece",
                piece.members, recomputed.members
            )));
        }
        if !piece.tree().graph().is_clean() || piece.tree().len() >= t.len() {
            return Err(Error::InvariantViolation("decomposition piece is not clean or not smaller".into()));
        }
    }
    Ok(d)
}

/// Whether `group` (a multiset of edges) can be drawn one edge per distinct
/// cluster of `c`: a bipartite matching from group positions to clusters.
pub fn is_k_group(c: &Clustering, group: &[EdgeId]) -> bool {
    matches_into(&c.clusters.iter().map(|x| x.edges.as_slice()).collect::<Vec<_>>(), group)
}

fn matches_into(clusters: &[&[EdgeId]], group: &[EdgeId]) -> bool {
    fn augment(
        i: usize,
        group: &[EdgeId],
        clusters: &[&[EdgeId]],
        seen: &mut [bool],
        owner: &mut [Option<usize>],
    ) -> bool {
        for (j, cl) in clusters.iter().enumerate() {
            if seen[j] || !cl.contains(&group[i]) {
                continue;
            }
            seen[j] = true;
            if owner[j].is_none_or(|k| augment(k, group, clusters, seen, owner)) {
                owner[j] = Some(i);
                return true;
            }
        }
        false
    }
    if group.len() > clusters.len() {
        return false;
    }
    let mut owner = vec![None; clusters.len()];
    (0..group.len()).all(|i| {
        let mut seen = vec![false; clusters.len()];
        augment(i, group, clusters, &mut seen, &mut owner)
    })
}

/// All k-groups of `c` as sorted multisets, each listed once.
pub fn enumerate_k_groups(c: &Clustering, k: usize) -> Vec<Vec<EdgeId>> {
    let sets: Vec<&[EdgeId]> = c.clusters.iter().map(|x| x.edges.as_slice()).collect();
    enumerate_groups_over(&sets, k)
}

fn enumerate_groups_over(clusters: &[&[EdgeId]], k: usize) -> Vec<Vec<EdgeId>> {
    fn rec(
        clusters: &[&[EdgeId]],
        start: usize,
        k: usize,
        cur: &mut Vec<EdgeId>,
        out: &mut BTreeSet<Vec<EdgeId>>,
    ) {
        if cur.len() == k {
            let mut g = cur.clone();
            g.sort_unstable();
            out.insert(g);
            return;
        }
        for i in start..clusters.len() {
            for &e in clusters[i] {
                cur.push(e);
                rec(clusters, i + 1, k, cur, out);
                cur.pop();
            }
        }
    }
    let mut out = BTreeSet::new();
    rec(clusters, 0, k, &mut Vec::new(), &mut out);
    out.into_iter().collect()
}

/// Checks that a k-group of C* maps back to a k-group of C.
pub fn check_distinct_clusters_1(
    c_star: &Clustering,
    map: &ResidualMap,
    c: &Clustering,
    k_group: &[EdgeId],
) -> Result<bool> {
    if !is_k_group(c_star, k_group) {
        return Err(Error::InvalidGroup(format!("{k_group:?} is not a k-group of C*")));
    }
    let original = k_group
        .iter()
        .map(|&e| map.unmap(e).ok_or_else(|| Error::InvalidGroup(format!("edge {e} has no preimage"))))
        .collect::<Result<Vec<_>>>()?;
    Ok(is_k_group(c, &original))
}

/// Clusters a super-k-group may draw from: those of C̄* and the non-root clusters of every C*_z.
pub fn super_group_clusters(d: &Decomposition) -> Result<Vec<Vec<EdgeId>>> {
    let mut out = Vec::new();
    for piece in d.subtrees.values() {
        for cl in signature_paths(piece)?.clusters {
            if !cl.is_root {
                out.push(cl.edges);
            }
        }
    }
    if let Some(rem) = &d.remainder {
        out.extend(signature_paths(rem)?.clusters.into_iter().map(|cl| cl.edges));
    }
    Ok(out)
}

pub fn is_super_k_group(d: &Decomposition, group: &[EdgeId]) -> Result<bool> {
    let clusters = super_group_clusters(d)?;
    let refs: Vec<&[EdgeId]> = clusters.iter().map(Vec::as_slice).collect();
    Ok(matches_into(&refs, group))
}

pub fn enumerate_super_k_groups(d: &Decomposition, k: usize) -> Result<Vec<Vec<EdgeId>>> {
    let clusters = super_group_clusters(d)?;
    let refs: Vec<&[EdgeId]> = clusters.iter().map(Vec::as_slice).collect();
    Ok(enumerate_groups_over(&refs, k))
}

/// Checks that a super-k-group of a decomposition is a k-group of C.
pub fn check_distinct_clusters_2(d: &Decomposition, c: &Clustering, super_group: &[EdgeId]) -> Result<bool> {
    if !is_super_k_group(d, super_group)? {
        return Err(Error::InvalidGroup(format!("{super_group:?} is not a super-k-group")));
    }
    Ok(is_k_group(c, super_group))
}
