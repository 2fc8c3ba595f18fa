//! Brute-force references. Nothing here shares code with the engine's join
//! path beyond the `Relation` container itself.

use std::collections::{BTreeMap, BTreeSet, HashMap};

use num_bigint::BigUint;
use serde::Serialize;

use crate::cec::{Cec, Clustering};
use crate::error::{Error, Result};
use crate::hypergraph::{AttrId, AttrSet, EdgeId, HyperedgeTree, Hypergraph};
use crate::load::Sizes;
use crate::relation::{Instance, Relation, Tuple, Value};

/// Default cap on the number of join tuples an oracle will materialize.
pub const DEFAULT_OUTPUT_CAP: usize = 2_000_000;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct OracleResult {
    #[serde(skip)]
    pub join: Relation,
    pub join_size: usize,
    pub min_cover_size: usize,
    /// ρ, the integral edge-cover number.
    pub agm_exponent: usize,
}

pub fn oracle(inst: &Instance) -> Result<OracleResult> {
    let join = oracle_join(inst, DEFAULT_OUTPUT_CAP)?;
    let rho = oracle_min_cover(inst.graph())?;
    Ok(OracleResult { join_size: join.len(), join, min_cover_size: rho, agm_exponent: rho })
}

/// Join by backtracking over attribute assignments in ascending id order.
/// After each assignment every relation must still hold a tuple agreeing
/// with the assigned attributes of its scheme.
pub fn oracle_join(inst: &Instance, cap: usize) -> Result<Relation> {
    let g = inst.graph();
    let attrs: Vec<AttrId> = g.vertex_set().iter().collect();
    let rels: Vec<&Relation> = inst.relations().values().collect();
    let mut assignment: BTreeMap<AttrId, Value> = BTreeMap::new();
    let mut out: Vec<Tuple> = Vec::new();
    backtrack(&attrs, 0, &rels, &mut assignment, &mut out, cap)?;
    Relation::new(g.vertex_set(), out)
}

fn agrees(r: &Relation, t: &[Value], assignment: &BTreeMap<AttrId, Value>) -> bool {
    r.scheme().iter().enumerate().all(|(i, a)| assignment.get(&a).is_none_or(|v| *v == t[i]))
}

fn backtrack(
    attrs: &[AttrId],
    depth: usize,
    rels: &[&Relation],
    assignment: &mut BTreeMap<AttrId, Value>,
    out: &mut Vec<Tuple>,
    cap: usize,
) -> Result<()> {
    if depth == attrs.len() {
        if out.len() >= cap {
            return Err(Error::OracleLimit(format!("join exceeds {cap} tuples")));
        }
        out.push(assignment.values().copied().collect());
        return Ok(());
    }
    let a = attrs[depth];
    let holders: Vec<&Relation> = rels.iter().copied().filter(|r| r.scheme().contains(a)).collect();
    let first = holders[0];
    let col = first.column(a).unwrap();
    let candidates: BTreeSet<Value> =
        first.tuples().iter().filter(|t| agrees(first, t, assignment)).map(|t| t[col]).collect();
    for v in candidates {
        assignment.insert(a, v);
        if holders.iter().all(|r| r.tuples().iter().any(|t| agrees(r, t, assignment))) {
            backtrack(attrs, depth + 1, rels, assignment, out, cap)?;
        }
        assignment.remove(&a);
    }
    Ok(())
}

/// Rows keyed by attribute, for the hash-based reference join.
#[derive(Clone)]
struct Table {
    attrs: Vec<AttrId>,
    rows: Vec<Vec<Value>>,
}

impl Table {
    fn from_relation(r: &Relation) -> Self {
        Table { attrs: r.scheme().iter().collect(), rows: r.tuples().to_vec() }
    }

    fn key_of(&self, row: &[Value], on: &[AttrId]) -> Vec<Value> {
        on.iter().map(|a| row[self.attrs.iter().position(|x| x == a).unwrap()]).collect()
    }

    fn shared(&self, other: &Table) -> Vec<AttrId> {
        self.attrs.iter().copied().filter(|a| other.attrs.contains(a)).collect()
    }

    fn semi_join(&mut self, other: &Table) {
        let on = self.shared(other);
        let keys: std::collections::HashSet<Vec<Value>> = other.rows.iter().map(|r| other.key_of(r, &on)).collect();
        let rows = std::mem::take(&mut self.rows);
        self.rows = rows.into_iter().filter(|r| keys.contains(&self.key_of(r, &on))).collect();
    }

    fn join(&self, other: &Table, cap: usize) -> Result<Table> {
        let on = self.shared(other);
        let extra: Vec<AttrId> = other.attrs.iter().copied().filter(|a| !self.attrs.contains(a)).collect();
        let mut index: HashMap<Vec<Value>, Vec<&Vec<Value>>> = HashMap::new();
        for r in &other.rows {
            index.entry(other.key_of(r, &on)).or_default().push(r);
        }
        let mut rows = Vec::new();
        for r in &self.rows {
            if let Some(ms) = index.get(&self.key_of(r, &on)) {
                for m in ms {
                    if rows.len() >= cap {
                        return Err(Error::OracleLimit(format!("join exceeds {cap} tuples")));
                    }
                    let mut row = r.clone();
                    row.extend(other.key_of(m, &extra));
                    rows.push(row);
                }
            }
        }
        let mut attrs = self.attrs.clone();
        attrs.extend(extra);
        Ok(Table { attrs, rows })
    }
}

/// Semi-join reduction bottom-up then top-down along `t`, then joins parent to children.
pub fn oracle_yannakakis(inst: &Instance, t: &HyperedgeTree) -> Result<Relation> {
    oracle_yannakakis_capped(inst, t, DEFAULT_OUTPUT_CAP)
}

pub fn oracle_yannakakis_capped(inst: &Instance, t: &HyperedgeTree, cap: usize) -> Result<Relation> {
    if t.graph() != inst.graph() {
        return Err(Error::Precondition("tree and instance disagree on the hypergraph".into()));
    }
    let mut tables: BTreeMap<EdgeId, Table> =
        inst.relations().iter().map(|(&e, r)| (e, Table::from_relation(r))).collect();
    let post = t.postorder();
    for &e in &post {
        if let Some(p) = t.parent(e) {
            let child = tables[&e].clone();
            tables.get_mut(&p).unwrap().semi_join(&child);
        }
    }
    for &e in post.iter().rev() {
        if let Some(p) = t.parent(e) {
            let parent = tables[&p].clone();
            tables.get_mut(&e).unwrap().semi_join(&parent);
        }
    }
    let mut acc = tables[&t.root()].clone();
    for e in t.preorder().into_iter().skip(1) {
        acc = acc.join(&tables[&e], cap)?;
    }
    let vs = inst.graph().vertex_set();
    let order: Vec<usize> = vs.iter().map(|a| acc.attrs.iter().position(|x| *x == a).unwrap()).collect();
    let rows = acc.rows.iter().map(|r| order.iter().map(|&i| r[i]).collect()).collect();
    Relation::new(vs, rows)
}

/// Smallest number of edges covering every attribute, by exhaustive search.
pub fn oracle_min_cover(g: &Hypergraph) -> Result<usize> {
    let n = g.num_edges();
    if n > 20 {
        return Err(Error::OracleLimit(format!("{n} edges exceed the exhaustive limit of 20")));
    }
    let all = g.vertex_set();
    let attrs: Vec<AttrSet> = g.edges().iter().map(|e| e.attrs).collect();
    let mut best = n;
    for mask in 0u32..(1u32 << n) {
        let size = mask.count_ones() as usize;
        if size >= best {
            continue;
        }
        let covered = (0..n).filter(|i| mask & (1 << i) != 0).fold(AttrSet::empty(), |s, i| s.union(attrs[i]));
        if covered == all {
            best = size;
        }
    }
    Ok(best)
}

/// Acyclicity by trying every labelled tree on the edges (Prüfer sequences).
pub fn oracle_acyclic(g: &Hypergraph) -> Result<bool> {
    let n = g.num_edges();
    if n > 6 {
        return Err(Error::OracleLimit(format!("{n} edges exceed the exhaustive limit of 6")));
    }
    let attrs: Vec<AttrSet> = g.edges().iter().map(|e| e.attrs).collect();
    if n <= 2 {
        return Ok(true);
    }
    let total = n.pow(n as u32 - 2);
    for code in 0..total {
        let mut seq = Vec::with_capacity(n - 2);
        let mut c = code;
        for _ in 0..n - 2 {
            seq.push(c % n);
            c /= n;
        }
        let adj = prufer_edges(&seq, n);
        if satisfies_connectedness(&attrs, &adj) {
            return Ok(true);
        }
    }
    Ok(false)
}

fn prufer_edges(seq: &[usize], n: usize) -> Vec<Vec<usize>> {
    let mut degree = vec![1usize; n];
    for &s in seq {
        degree[s] += 1;
    }
    let mut adj = vec![Vec::new(); n];
    for &s in seq {
        let leaf = (0..n).find(|&i| degree[i] == 1).unwrap();
        adj[leaf].push(s);
        adj[s].push(leaf);
        degree[leaf] -= 1;
        degree[s] -= 1;
    }
    let rest: Vec<usize> = (0..n).filter(|&i| degree[i] == 1).collect();
    adj[rest[0]].push(rest[1]);
    adj[rest[1]].push(rest[0]);
    adj
}

/// For every attribute, the nodes holding it induce a connected subgraph.
fn satisfies_connectedness(attrs: &[AttrSet], adj: &[Vec<usize>]) -> bool {
    let all = attrs.iter().fold(AttrSet::empty(), |s, a| s.union(*a));
    all.iter().all(|a| {
        let nodes: Vec<usize> = (0..attrs.len()).filter(|&i| attrs[i].contains(a)).collect();
        let mut seen = vec![false; attrs.len()];
        let mut stack = vec![nodes[0]];
        seen[nodes[0]] = true;
        let mut count = 0;
        while let Some(x) = stack.pop() {
            count += 1;
            for &y in &adj[x] {
                if !seen[y] && attrs[y].contains(a) {
                    seen[y] = true;
                    stack.push(y);
                }
            }
        }
        count == nodes.len()
    })
}

/// Π over the cover of |R(f)|, an upper bound on the join size.
pub fn agm_bound(inst: &Instance, f: &Cec) -> BigUint {
    f.members().iter().map(|e| BigUint::from(inst.relation(*e).len())).product()
}

/// Whether `group` can be assigned to distinct clusters, by plain backtracking.
pub fn oracle_is_k_group(c: &Clustering, group: &[EdgeId]) -> bool {
    fn assign(c: &Clustering, group: &[EdgeId], used: &mut Vec<bool>) -> bool {
        let Some((&first, rest)) = group.split_first() else { return true };
        for (j, cl) in c.clusters.iter().enumerate() {
            if !used[j] && cl.edges.contains(&first) {
                used[j] = true;
                if assign(c, rest, used) {
                    return true;
                }
                used[j] = false;
            }
        }
        false
    }
    assign(c, group, &mut vec![false; c.len()])
}

/// P_k by enumerating every multiset of k edges and testing it as a k-group.
pub fn oracle_max_k_product(sizes: &Sizes, c: &Clustering, k: usize) -> BigUint {
    let edges: Vec<EdgeId> = c.union().into_iter().collect();
    let mut best = BigUint::from(0u32);
    let mut cur = Vec::with_capacity(k);
    fn rec(
        edges: &[EdgeId],
        start: usize,
        k: usize,
        cur: &mut Vec<EdgeId>,
        c: &Clustering,
        sizes: &Sizes,
        best: &mut BigUint,
    ) {
        if cur.len() == k {
            if oracle_is_k_group(c, cur) {
                let p: BigUint = cur.iter().map(|e| BigUint::from(sizes.get(e).copied().unwrap_or(0))).product();
                if p > *best {
                    *best = p;
                }
            }
            return;
        }
        for i in start..edges.len() {
            cur.push(edges[i]);
            rec(edges, i, k, cur, c, sizes, best);
            cur.pop();
        }
    }
    rec(&edges, 0, k, &mut cur, c, sizes, &mut best);
    best
}
