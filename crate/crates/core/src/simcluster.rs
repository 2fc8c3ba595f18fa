//! Logical simulation of a cluster of p machines exchanging messages in
//! synchronous rounds. Only received words are accounted; no data is copied
//! between real processes.
//!
//! Machines are addressed physically (0..p). Algorithms work on a [`Block`],
//! a list of virtual machines where each virtual machine is a group of
//! physical machines that all hold the same data. Delivering a word to a
//! group charges every member that does not already hold it.

use std::collections::{BTreeMap, HashSet};
use std::sync::Arc;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::hypergraph::AttrSet;
use crate::relation::{join_all, project_tuple, Relation, Tuple, Value};

/// Sorted, duplicate-free physical machine ids.
pub type Group = Arc<[usize]>;

pub fn group<I: IntoIterator<Item = usize>>(ids: I) -> Group {
    let mut v: Vec<usize> = ids.into_iter().collect();
    v.sort_unstable();
    v.dedup();
    v.into()
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Block {
    groups: Vec<Group>,
}

impl Block {
    /// Machines 0..p, one virtual machine each.
    pub fn physical(p: usize) -> Self {
        Block { groups: (0..p).map(|m| group([m])).collect() }
    }

    pub fn new(groups: Vec<Group>) -> Result<Self> {
        if groups.is_empty() || groups.iter().any(|g| g.is_empty()) {
            return Err(Error::MachineBudget("a block needs at least one nonempty machine group".into()));
        }
        Ok(Block { groups })
    }

    pub fn len(&self) -> usize {
        self.groups.len()
    }

    pub fn is_empty(&self) -> bool {
        self.groups.is_empty()
    }

    pub fn groups(&self) -> &[Group] {
        &self.groups
    }

    pub fn group(&self, i: usize) -> &Group {
        &self.groups[i]
    }

    pub fn slice(&self, range: std::ops::Range<usize>) -> Result<Block> {
        if range.start >= range.end || range.end > self.groups.len() {
            return Err(Error::MachineBudget(format!("range {range:?} outside a block of {}", self.len())));
        }
        Ok(Block { groups: self.groups[range].to_vec() })
    }

    /// All physical machines of the block.
    pub fn machines(&self) -> Group {
        group(self.groups.iter().flat_map(|g| g.iter().copied()))
    }

    /// Arranges the first Π dims virtual machines into a grid.
    pub fn grid(&self, dims: &[usize]) -> Result<Grid> {
        let size = dims.iter().try_fold(1usize, |acc, &d| if d == 0 { None } else { acc.checked_mul(d) });
        match size {
            Some(n) if n <= self.len() => Ok(Grid { dims: dims.to_vec(), points: self.groups[..n].to_vec() }),
            _ => Err(Error::MachineBudget(format!("grid {dims:?} does not fit in {} machines", self.len()))),
        }
    }
}

/// Grid points in mixed-radix order, first dimension varying slowest.
#[derive(Clone, Debug)]
pub struct Grid {
    dims: Vec<usize>,
    points: Vec<Group>,
}

impl Grid {
    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn points(&self) -> &[Group] {
        &self.points
    }

    pub fn coords(&self, mut idx: usize) -> Vec<usize> {
        let mut out = vec![0; self.dims.len()];
        for (j, &d) in self.dims.iter().enumerate().rev() {
            out[j] = idx % d;
            idx /= d;
        }
        out
    }

    /// Block for factor `j`: virtual machine i is the union of the points whose j-th coordinate is i.
    pub fn factor_block(&self, j: usize) -> Block {
        let mut members: Vec<Vec<usize>> = vec![Vec::new(); self.dims[j]];
        for (idx, pt) in self.points.iter().enumerate() {
            members[self.coords(idx)[j]].extend(pt.iter().copied());
        }
        Block { groups: members.into_iter().map(group).collect() }
    }
}

/// Tuples held by one group of machines.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Part {
    pub holder: Group,
    pub tuples: Vec<Tuple>,
}

/// A relation spread over machine groups.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DistRelation {
    scheme: AttrSet,
    parts: Vec<Part>,
}

impl DistRelation {
    pub fn new(scheme: AttrSet) -> Self {
        DistRelation { scheme, parts: Vec::new() }
    }

    pub fn local(holder: Group, r: Relation) -> Self {
        let scheme = r.scheme();
        DistRelation { scheme, parts: vec![Part { holder, tuples: r.into_tuples() }] }
    }

    pub fn push(&mut self, holder: Group, tuples: Vec<Tuple>) {
        if !tuples.is_empty() {
            self.parts.push(Part { holder, tuples });
        }
    }

    pub fn extend(&mut self, other: DistRelation) {
        debug_assert_eq!(self.scheme, other.scheme);
        self.parts.extend(other.parts);
    }

    pub fn scheme(&self) -> AttrSet {
        self.scheme
    }

    pub fn parts(&self) -> &[Part] {
        &self.parts
    }

    /// Tuple count summed over parts; replicas are counted once per part.
    pub fn stored(&self) -> usize {
        self.parts.iter().map(|p| p.tuples.len()).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.parts.iter().all(|p| p.tuples.is_empty())
    }

    pub fn iter(&self) -> impl Iterator<Item = (&Group, &Tuple)> {
        self.parts.iter().flat_map(|p| p.tuples.iter().map(move |t| (&p.holder, t)))
    }

    /// Gathers every part into one de-duplicated relation (no communication charged).
    pub fn collect(&self) -> Relation {
        Relation::new(self.scheme, self.iter().map(|(_, t)| t.clone()).collect()).expect("parts share the scheme")
    }

    /// Applies a local per-tuple rewrite on every machine.
    pub fn map_local(&self, scheme: AttrSet, mut f: impl FnMut(&[Value]) -> Option<Tuple>) -> DistRelation {
        let parts = self
            .parts
            .iter()
            .map(|p| Part { holder: p.holder.clone(), tuples: p.tuples.iter().filter_map(|t| f(t)).collect() })
            .filter(|p| !p.tuples.is_empty())
            .collect();
        DistRelation { scheme, parts }
    }

    /// Tuples held by machine `m`, from every part whose holder contains it.
    pub fn at_machine(&self, m: usize) -> Vec<Tuple> {
        self.parts
            .iter()
            .filter(|p| p.holder.binary_search(&m).is_ok())
            .flat_map(|p| p.tuples.iter().cloned())
            .collect()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct LoadReport {
    pub rounds: usize,
    pub per_round_load: Vec<u64>,
    pub max_load: u64,
    #[serde(rename = "L")]
    pub l: f64,
    pub ratio: f64,
}

/// The message ledger: words received per round per physical machine.
#[derive(Clone, Debug)]
pub struct SimCluster {
    p: usize,
    ledger: Vec<Vec<u64>>,
    sent: Vec<u64>,
    round_cap: Option<usize>,
}

impl SimCluster {
    pub fn new(p: usize) -> Result<Self> {
        if p == 0 {
            return Err(Error::Precondition("a cluster needs at least one machine".into()));
        }
        Ok(SimCluster { p, ledger: Vec::new(), sent: Vec::new(), round_cap: None })
    }

    pub fn with_round_cap(mut self, cap: usize) -> Self {
        self.round_cap = Some(cap);
        self
    }

    pub fn p(&self) -> usize {
        self.p
    }

    pub fn round_cap(&self) -> Option<usize> {
        self.round_cap
    }

    fn ensure_round(&mut self, round: usize) {
        while self.ledger.len() <= round {
            self.ledger.push(vec![0; self.p]);
            self.sent.push(0);
        }
    }

    /// Delivers `words` from `src` to every machine of `dst`; members of both are not charged.
    pub fn send(&mut self, round: usize, src: &[usize], dst: &[usize], words: u64) {
        if words == 0 {
            return;
        }
        self.ensure_round(round);
        for &m in dst {
            if src.binary_search(&m).is_err() {
                self.ledger[round][m] += words;
                self.sent[round] += words;
            }
        }
    }

    pub fn received(&self, round: usize, machine: usize) -> u64 {
        self.ledger.get(round).map_or(0, |r| r[machine])
    }

    /// Words sent in `round`, counted once per receiving machine.
    pub fn sent(&self, round: usize) -> u64 {
        self.sent.get(round).copied().unwrap_or(0)
    }

    pub fn ledger(&self) -> &[Vec<u64>] {
        &self.ledger
    }

    pub fn round_loads(&self) -> Vec<u64> {
        self.ledger.iter().map(|r| r.iter().copied().max().unwrap_or(0)).collect()
    }

    /// Deals the tuples round-robin over the block without charging: the initial placement.
    pub fn place_round_robin(&self, r: &Relation, block: &Block) -> DistRelation {
        let mut buckets: Vec<Vec<Tuple>> = vec![Vec::new(); block.len()];
        for (i, t) in r.tuples().iter().enumerate() {
            buckets[i % block.len()].push(t.clone());
        }
        let mut out = DistRelation::new(r.scheme());
        for (g, b) in block.groups().iter().zip(buckets) {
            out.push(g.clone(), b);
        }
        out
    }

    /// Sends the tuples of all relations round-robin over the block, one
    /// counter for all of them, so every virtual machine receives within one
    /// tuple of the mean.
    pub fn scatter_balanced(&mut self, round: usize, rels: &[&DistRelation], block: &Block) -> Result<Vec<DistRelation>> {
        if block.is_empty() {
            return Err(Error::MachineBudget("scatter to an empty block".into()));
        }
        let mut next = 0usize;
        let mut out = Vec::with_capacity(rels.len());
        for rel in rels {
            let w = rel.scheme().len() as u64;
            let mut buckets: Vec<Vec<Tuple>> = vec![Vec::new(); block.len()];
            for (src, t) in rel.iter() {
                let i = next % block.len();
                next += 1;
                self.send(round, src, block.group(i), w);
                buckets[i].push(t.clone());
            }
            let mut d = DistRelation::new(rel.scheme());
            for (g, b) in block.groups().iter().zip(buckets) {
                d.push(g.clone(), b);
            }
            out.push(d);
        }
        Ok(out)
    }

    /// Every machine of the block receives the whole relation.
    pub fn broadcast(&mut self, round: usize, rel: &DistRelation, block: &Block) -> DistRelation {
        let all = block.machines();
        let w = rel.scheme().len() as u64;
        for (src, _) in rel.iter() {
            self.send(round, src, &all, w);
        }
        let mut out = DistRelation::new(rel.scheme());
        out.push(all, rel.collect().into_tuples());
        out
    }

    /// Sort-based semi-join: `big` keeps the tuples whose projection on the
    /// scheme of `small` occurs in `small`. Both inputs are sorted together by
    /// key and cut into equal contiguous chunks, one per virtual machine; a key
    /// that straddles a chunk boundary has its `small` tuple copied forward.
    pub fn semi_join(&mut self, round: usize, big: &DistRelation, small: &DistRelation, block: &Block) -> Result<DistRelation> {
        let key = small.scheme();
        if !key.is_subset(big.scheme()) {
            return Err(Error::Precondition("semi-join needs the small scheme inside the big one".into()));
        }
        if block.is_empty() {
            return Err(Error::MachineBudget("semi-join on an empty block".into()));
        }
        // (key, tag, tuple, source); tag 0 sorts small tuples before big ones with the same key.
        let mut items: Vec<(Tuple, u8, &Tuple, &Group)> = small
            .iter()
            .map(|(g, t)| (t.clone(), 0u8, t, g))
            .chain(big.iter().map(|(g, t)| (project_tuple(big.scheme(), t, key), 1u8, t, g)))
            .collect();
        items.sort_unstable_by(|a, b| (&a.0, a.1, a.2).cmp(&(&b.0, b.1, b.2)));
        items.dedup_by(|a, b| a.0 == b.0 && a.1 == b.1 && a.2 == b.2);

        let chunk = items.len().div_ceil(block.len()).max(1);
        let (wb, ws) = (big.scheme().len() as u64, key.len() as u64);
        let keys: HashSet<&Tuple> = items.iter().filter(|x| x.1 == 0).map(|x| &x.0).collect();
        let mut buckets: Vec<Vec<Tuple>> = vec![Vec::new(); block.len()];
        let mut small_home: Option<(&Tuple, usize)> = None;
        for (i, (k, tag, t, src)) in items.iter().enumerate() {
            let dst = i / chunk;
            if *tag == 0 {
                self.send(round, src, block.group(dst), ws);
                small_home = Some((k, dst));
                continue;
            }
            self.send(round, src, block.group(dst), wb);
            if let Some((sk, home)) = small_home {
                if sk == k && home != dst && i % chunk == 0 {
                    let from = block.group(home).clone();
                    self.send(round, &from, block.group(dst), ws);
                }
            }
            if keys.contains(k) {
                buckets[dst].push((*t).clone());
            }
        }
        let mut out = DistRelation::new(big.scheme());
        for (g, b) in block.groups().iter().zip(buckets) {
            out.push(g.clone(), b);
        }
        Ok(out)
    }

    /// Grid cartesian product: factor j is cut round-robin into dims[j]
    /// shards and the point with coordinates (i_1, …, i_d) receives shard i_j
    /// of every factor, then combines them locally.
    pub fn cartesian_product(&mut self, round: usize, factors: &[&DistRelation], grid: &Grid) -> Result<DistRelation> {
        if factors.len() != grid.dims().len() {
            return Err(Error::Precondition("one grid dimension per factor is required".into()));
        }
        let mut shards: Vec<Vec<Vec<(&Group, &Tuple)>>> = Vec::with_capacity(factors.len());
        for (f, &d) in factors.iter().zip(grid.dims()) {
            let mut s = vec![Vec::new(); d];
            for (i, item) in f.iter().enumerate() {
                s[i % d].push(item);
            }
            shards.push(s);
        }
        let scheme = factors.iter().fold(AttrSet::empty(), |s, f| s.union(f.scheme()));
        let mut out = DistRelation::new(scheme);
        for (idx, pt) in grid.points().iter().enumerate() {
            let coords = grid.coords(idx);
            let mut rels = Vec::with_capacity(factors.len());
            for (j, f) in factors.iter().enumerate() {
                let w = f.scheme().len() as u64;
                let shard = &shards[j][coords[j]];
                for (src, _) in shard {
                    self.send(round, src, pt, w);
                }
                rels.push(Relation::new(f.scheme(), shard.iter().map(|(_, t)| (*t).clone()).collect())?);
            }
            out.push(pt.clone(), join_all(rels).into_tuples());
        }
        Ok(out)
    }

    /// Per-round and maximum loads; fails if the round cap was exceeded.
    pub fn finish(&self, l: f64) -> Result<LoadReport> {
        let per_round_load = self.round_loads();
        let rounds = per_round_load.len();
        if let Some(cap) = self.round_cap {
            if rounds > cap {
                return Err(Error::Simulation(format!("{rounds} rounds exceed the cap of {cap}")));
            }
        }
        let max_load = per_round_load.iter().copied().max().unwrap_or(0);
        let ratio = if l > 0.0 { max_load as f64 / l } else { 0.0 };
        Ok(LoadReport { rounds, per_round_load, max_load, l, ratio })
    }

    /// Per-round totals of words received and sent, for conservation checks.
    pub fn round_totals(&self) -> BTreeMap<usize, (u64, u64)> {
        self.ledger.iter().enumerate().map(|(r, row)| (r, (row.iter().sum(), self.sent[r]))).collect()
    }
}
