//! The recursive join algorithm on a simulated cluster.
//!
//! Each level fixes an anchor (f°, A°), splits the values of A° into heavy
//! values and light intervals, gives every configuration a slice of the
//! machines, and solves it either by dropping A° (heavy) or by decomposing
//! around the signature path of f° (light). The light branch runs every
//! factor on a replicated grid: factor j's virtual machine i is the set of
//! grid points whose j-th coordinate is i, so each grid point ends up holding
//! one shard of every factor and finishes with a local join.

use std::collections::BTreeMap;

use log::debug;
use serde::{Deserialize, Serialize};

use crate::cec::{cleanse, decompose, edge_cover, find_anchor, remove_attribute, signature_paths, Anchor, Cec};
use crate::error::{Error, Result};
use crate::hypergraph::{build_join_tree, AttrId, EdgeId, HyperedgeTree};
use crate::load::{
    allocate_config_machines, audit_budgets, induced_load_sizes, load_upper_bound, LoadProfile, Sizes,
};
use crate::relation::{join_all, merge_tuples, project_tuple, Instance, Relation, Value};
use crate::simcluster::{Block, DistRelation, LoadReport, SimCluster};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EngineConfig {
    pub c_load: f64,
    pub c_alloc: f64,
    pub c_cfg: f64,
}

impl Default for EngineConfig {
    fn default() -> Self {
        EngineConfig { c_load: 4.0, c_alloc: 4.0, c_cfg: 4.0 }
    }
}

impl EngineConfig {
    /// Applies overrides of the form `c_load=3,c_alloc=2`.
    pub fn with_overrides(mut self, spec: &str) -> Result<Self> {
        for item in spec.split(',').map(str::trim).filter(|s| !s.is_empty()) {
            let (k, v) = item
                .split_once('=')
                .ok_or_else(|| Error::Parse(format!("expected name=value, got `{item}`")))?;
            let v: f64 = v.trim().parse().map_err(|_| Error::Parse(format!("bad number in `{item}`")))?;
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::Parse(format!("constant `{item}` must be positive")));
            }
            match k.trim() {
                "c_load" => self.c_load = v,
                "c_alloc" => self.c_alloc = v,
                "c_cfg" => self.c_cfg = v,
                other => return Err(Error::Parse(format!("unknown constant `{other}`"))),
            }
        }
        Ok(self)
    }
}

/// Signature-path frequency of every value of the anchor attribute.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize)]
pub struct FrequencyTable {
    pub attribute: AttrId,
    pub counts: BTreeMap<Value, u64>,
}

impl FrequencyTable {
    pub fn from_relations<'a>(attribute: AttrId, rels: impl IntoIterator<Item = &'a Relation>) -> Self {
        let mut counts = BTreeMap::new();
        for r in rels {
            let col = r.column(attribute).expect("signature-path relations contain the anchor attribute");
            for t in r.tuples() {
                *counts.entry(t[col]).or_insert(0) += 1;
            }
        }
        FrequencyTable { attribute, counts }
    }

    pub fn count(&self, v: Value) -> u64 {
        self.counts.get(&v).copied().unwrap_or(0)
    }

    pub fn total(&self) -> u64 {
        self.counts.values().sum()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum ConfigKind {
    Heavy { value: Value },
    /// Light values in `[lo, hi)`; `hi = None` means unbounded.
    Light { lo: Value, hi: Option<Value> },
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Configuration {
    #[serde(flatten)]
    pub kind: ConfigKind,
    /// Total signature-path frequency of the configuration's values.
    pub frequency: u64,
}

impl Configuration {
    pub fn is_heavy(&self) -> bool {
        matches!(self.kind, ConfigKind::Heavy { .. })
    }
}

/// Heavy values have frequency at least `l`. Light values are swept in
/// ascending order into intervals, closing an interval just before its total
/// would exceed `l`. The intervals tile the whole domain.
pub fn split_table(table: &FrequencyTable, l: f64) -> Vec<Configuration> {
    let mut out = Vec::new();
    let mut lo: Value = 0;
    let mut total = 0u64;
    for (&v, &f) in &table.counts {
        if f as f64 >= l {
            out.push(Configuration { kind: ConfigKind::Heavy { value: v }, frequency: f });
        } else if total > 0 && (total + f) as f64 > l {
            out.push(Configuration { kind: ConfigKind::Light { lo, hi: Some(v) }, frequency: total });
            lo = v;
            total = f;
        } else {
            total += f;
        }
    }
    out.push(Configuration { kind: ConfigKind::Light { lo, hi: None }, frequency: total });
    out
}

/// Builds the frequency table over sig-path(f°) and splits it.
pub fn split_configurations(inst: &Instance, f: &Cec, anchor: &Anchor, l: f64) -> Result<Vec<Configuration>> {
    if l.is_nan() || l <= 0.0 {
        return Err(Error::Precondition(format!("load must be positive, got {l}")));
    }
    let path = f.signature_path(anchor.leaf)?.nodes;
    let table = FrequencyTable::from_relations(anchor.attribute, path.iter().map(|&e| inst.relation(e)));
    Ok(split_table(&table, l))
}

/// Maps an anchor value to the index of its configuration.
struct Router {
    heavy: BTreeMap<Value, usize>,
    light: BTreeMap<Value, usize>,
}

impl Router {
    fn new(configs: &[Configuration]) -> Self {
        let mut heavy = BTreeMap::new();
        let mut light = BTreeMap::new();
        for (i, c) in configs.iter().enumerate() {
            match c.kind {
                ConfigKind::Heavy { value } => heavy.insert(value, i),
                ConfigKind::Light { lo, .. } => light.insert(lo, i),
            };
        }
        Router { heavy, light }
    }

    fn route(&self, v: Value) -> usize {
        match self.heavy.get(&v) {
            Some(&i) => i,
            None => *self.light.range(..=v).next_back().expect("light intervals start at 0").1,
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct EngineStats {
    pub levels: usize,
    pub local_joins: usize,
    pub heavy_configurations: usize,
    pub light_configurations: usize,
    pub skipped_configurations: usize,
    /// Configurations at the first level.
    pub top_configurations: usize,
    pub top_heavy: usize,
    /// Largest configuration count over c_cfg · machines, across levels.
    pub max_configuration_ratio: f64,
    /// Smallest factor applied to the requested machine counts to fit a block.
    pub min_allocation_scale: f64,
    /// Largest Σ shares / machines at any level.
    pub max_budget_ratio: f64,
    /// Largest grid size over the machines of its configuration.
    pub max_grid_ratio: f64,
    pub grids: usize,
    pub semi_joins: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RunReport {
    pub machines: usize,
    pub input_size: u64,
    pub output_size: u64,
    pub profile: LoadProfile,
    /// m / p^(1/|F|).
    pub load_upper_bound: f64,
    pub load: LoadReport,
    pub round_cap: usize,
    /// max_load ≤ c_load · L. Measured, not enforced.
    pub within_load_bound: bool,
    pub constants: EngineConfig,
    pub stats: EngineStats,
    pub violations: Vec<String>,
}

impl RunReport {
    pub fn ok(&self) -> bool {
        self.violations.is_empty()
    }
}

pub struct Solution {
    pub result: DistRelation,
    pub report: RunReport,
}

impl Solution {
    /// The result gathered onto one machine, de-duplicated.
    pub fn collect(&self) -> Relation {
        self.result.collect()
    }
}

/// Solves a clean instance whose cover was computed from `t`.
pub fn solve(inst: &Instance, t: &HyperedgeTree, f: &Cec, machines: usize, cfg: &EngineConfig) -> Result<Solution> {
    if !inst.graph().is_clean() {
        return Err(Error::NotClean("solve expects a clean query; use run to clean it first".into()));
    }
    if t.graph() != inst.graph() {
        return Err(Error::Precondition("the tree is over a different hypergraph".into()));
    }
    if f.tree() != t || edge_cover(t).members() != f.members() {
        return Err(Error::Precondition("the cover is not the canonical cover of the tree".into()));
    }
    execute(inst, inst, t, Vec::new(), machines, cfg)
}

/// Builds a join tree unless one is given, cleans the query with simulated
/// semi-joins if needed, and solves it.
pub fn run(inst: &Instance, tree: Option<&HyperedgeTree>, machines: usize, cfg: &EngineConfig) -> Result<Solution> {
    let t = match tree {
        Some(t) => {
            if t.graph() != inst.graph() {
                return Err(Error::Precondition("the tree is over a different hypergraph".into()));
            }
            if !crate::hypergraph::validate_tree(t) {
                return Err(Error::InvalidTree("connectedness requirement violated".into()));
            }
            t.clone()
        }
        None => build_join_tree(inst.graph()).ok_or(Error::Cyclic)?,
    };
    let (tc, removals) = t.cleaning_plan();
    let cleaned = inst.clone().with_graph(tc.graph().clone())?;
    execute(inst, &cleaned, &tc, removals, machines, cfg)
}

fn execute(
    original: &Instance,
    inst: &Instance,
    t: &HyperedgeTree,
    removals: Vec<(EdgeId, EdgeId)>,
    machines: usize,
    cfg: &EngineConfig,
) -> Result<Solution> {
    let g = original.graph();
    let round_cap = 2 * (g.vertex_set().len() + g.num_edges());
    let cover = edge_cover(t);
    let clustering = signature_paths(&cover)?;
    let sizes: Sizes = original.sizes().into_iter().filter(|(e, _)| t.contains(*e)).collect();
    let profile = induced_load_sizes(&sizes, &clustering, machines)?;
    let mut engine = Engine {
        cluster: SimCluster::new(machines)?,
        cfg,
        stats: EngineStats { min_allocation_scale: f64::INFINITY, ..Default::default() },
        violations: Vec::new(),
        depth: 0,
    };
    let block = Block::physical(machines);
    let mut rels: BTreeMap<EdgeId, DistRelation> = original
        .relations()
        .iter()
        .map(|(&e, r)| (e, engine.cluster.place_round_robin(r, &block)))
        .collect();

    let mut round = 0;
    for (small, big) in removals {
        let s = rels.remove(&small).ok_or(Error::UnknownEdge(small))?;
        let b = rels.get(&big).ok_or(Error::UnknownEdge(big))?;
        let reduced = engine.cluster.semi_join(round, b, &s, &block)?;
        rels.insert(big, reduced);
        engine.stats.semi_joins += 1;
        round += 1;
    }
    let (result, _) = engine.solve_block(&cover, rels, &block, round)?;
    debug_assert_eq!(inst.graph().vertex_set(), result.scheme());

    let load = engine.cluster.finish(profile.l)?;
    let mut violations = engine.violations;
    if load.rounds > round_cap {
        violations.push(format!("{} rounds exceed the cap of {round_cap}", load.rounds));
    }
    let within_load_bound = load.max_load as f64 <= cfg.c_load * profile.l;
    if !within_load_bound {
        debug!("max load {} exceeds {} · L = {:.3}", load.max_load, cfg.c_load, cfg.c_load * profile.l);
    }
    for (r, (recv, sent)) in engine.cluster.round_totals() {
        if recv != sent {
            violations.push(format!("round {r}: {recv} words received but {sent} sent"));
        }
    }
    let mut stats = engine.stats;
    if !stats.min_allocation_scale.is_finite() {
        stats.min_allocation_scale = 1.0;
    }
    let output_size = result.collect().len() as u64;
    let report = RunReport {
        machines,
        input_size: original.input_size(),
        output_size,
        load_upper_bound: load_upper_bound(original.input_size(), machines, clustering.len()),
        profile,
        load,
        round_cap,
        within_load_bound,
        constants: cfg.clone(),
        stats,
        violations,
    };
    Ok(Solution { result, report })
}

struct Engine<'c> {
    cluster: SimCluster,
    cfg: &'c EngineConfig,
    stats: EngineStats,
    violations: Vec<String>,
    depth: usize,
}

/// A configuration that survived the emptiness check, with its machines.
struct Active {
    index: usize,
    heavy: bool,
    rels: BTreeMap<EdgeId, DistRelation>,
    block: Block,
}

impl Engine<'_> {
    fn solve_block(
        &mut self,
        cover: &Cec,
        rels: BTreeMap<EdgeId, DistRelation>,
        block: &Block,
        round: usize,
    ) -> Result<(DistRelation, usize)> {
        let t = cover.tree();
        let scheme = t.graph().vertex_set();
        if rels.values().any(DistRelation::is_empty) {
            return Ok((DistRelation::new(scheme), round));
        }
        if t.len() == 1 {
            return Ok((rels.into_values().next().unwrap(), round));
        }
        if block.len() == 1 {
            let home = block.group(0).clone();
            if rels.values().flat_map(|r| r.parts()).any(|p| p.holder != home) {
                return Err(Error::Simulation("local join over data that is not on its machine".into()));
            }
            self.stats.local_joins += 1;
            let joined = join_all(rels.values().map(DistRelation::collect).collect());
            return Ok((DistRelation::local(home, joined), round));
        }

        self.stats.levels += 1;
        let collected: BTreeMap<EdgeId, Relation> = rels.iter().map(|(&e, r)| (e, r.collect())).collect();
        let sizes: Sizes = collected.iter().map(|(&e, r)| (e, r.len() as u64)).collect();
        let clustering = signature_paths(cover)?;
        let machines = block.len();
        let l = induced_load_sizes(&sizes, &clustering, machines)?.l;
        let anchor = find_anchor(cover)?;
        let a = anchor.attribute;
        let path = cover.signature_path(anchor.leaf)?.nodes;
        let table = FrequencyTable::from_relations(a, path.iter().map(|e| &collected[e]));
        let configs = split_table(&table, l);
        let router = Router::new(&configs);

        let ratio = configs.len() as f64 / (self.cfg.c_cfg * machines as f64);
        self.stats.max_configuration_ratio = self.stats.max_configuration_ratio.max(ratio);
        if ratio > 1.0 {
            self.violations.push(format!("{} configurations on {machines} machines", configs.len()));
        }
        if self.depth == 0 {
            self.stats.top_configurations = configs.len();
            self.stats.top_heavy = configs.iter().filter(|c| c.is_heavy()).count();
        }
        debug!(
            "level {} edges={} machines={machines} L={l:.3} anchor=({}, {}) configurations={}",
            self.depth,
            t.len(),
            t.graph().edge_name(anchor.leaf),
            t.graph().attribute_name(a),
            configs.len()
        );

        // Split every relation holding A° by configuration, keeping tuples where they are.
        let mut split: BTreeMap<EdgeId, Vec<DistRelation>> = BTreeMap::new();
        for (&e, r) in &rels {
            let Some(col) = r.scheme().position(a) else { continue };
            let mut per: Vec<DistRelation> = vec![DistRelation::new(r.scheme()); configs.len()];
            for part in r.parts() {
                let mut buckets: Vec<Vec<_>> = vec![Vec::new(); configs.len()];
                for tup in &part.tuples {
                    buckets[router.route(tup[col])].push(tup.clone());
                }
                for (i, b) in buckets.into_iter().enumerate() {
                    per[i].push(part.holder.clone(), b);
                }
            }
            let parts_total: usize = per.iter().map(|d| d.collect().len()).sum();
            if parts_total != collected[&e].len() {
                return Err(Error::InvariantViolation(format!("R(e, η) do not partition relation {e}")));
            }
            split.insert(e, per);
        }

        let mut candidates = Vec::new();
        let mut requested = Vec::new();
        for (i, c) in configs.iter().enumerate() {
            let sub: BTreeMap<EdgeId, DistRelation> = rels
                .iter()
                .map(|(&e, r)| (e, split.get(&e).map_or_else(|| r.clone(), |per| per[i].clone())))
                .collect();
            if sub.values().any(DistRelation::is_empty) {
                self.stats.skipped_configurations += 1;
                continue;
            }
            let sub_sizes: Sizes = sub.iter().map(|(&e, r)| (e, r.collect().len() as u64)).collect();
            if !c.is_heavy() && path.iter().any(|e| sub_sizes[e] as f64 > l) {
                return Err(Error::InvariantViolation("light configuration with a signature-path relation above L".into()));
            }
            requested.push(allocate_config_machines(&sub_sizes, &clustering, l, self.cfg.c_alloc)?);
            candidates.push((i, c.is_heavy(), sub));
        }
        if candidates.is_empty() {
            return Ok((DistRelation::new(scheme), round));
        }

        let alloc = apportion(block, &requested)?;
        self.stats.min_allocation_scale = self.stats.min_allocation_scale.min(alloc.scale);
        let active: Vec<Active> = candidates
            .into_iter()
            .zip(alloc.blocks)
            .map(|((index, heavy, rels), block)| Active { index, heavy, rels, block })
            .collect();

        let heavy_plan = if active.iter().any(|x| x.heavy) {
            let residual = remove_attribute(cover, &anchor)?;
            Some(cleanse(&residual)?)
        } else {
            None
        };
        let light_plan = if active.iter().any(|x| !x.heavy) { Some(decompose(cover, &anchor)?) } else { None };

        let mut out = DistRelation::new(scheme);
        let mut end = round + 1;
        let mut light_audits = Vec::new();
        self.depth += 1;
        for act in active {
            let (res, finish) = if act.heavy {
                self.stats.heavy_configurations += 1;
                let value = match configs[act.index].kind {
                    ConfigKind::Heavy { value } => value,
                    ConfigKind::Light { .. } => unreachable!(),
                };
                self.solve_heavy(act, heavy_plan.as_ref().unwrap(), &anchor, value, round)?
            } else {
                self.stats.light_configurations += 1;
                let d = light_plan.as_ref().unwrap();
                self.solve_light(act, cover, d, &path, l, round, &mut light_audits)?
            };
            out.extend(res);
            end = end.max(finish);
        }
        self.depth -= 1;

        let audit = audit_budgets(&alloc.shares, machines, &light_audits);
        self.stats.max_budget_ratio = self.stats.max_budget_ratio.max(audit.ratio);
        for la in &audit.light {
            self.stats.max_grid_ratio = self.stats.max_grid_ratio.max(la.ratio);
        }
        self.violations.extend(audit.violations);
        Ok((out, end))
    }

    fn solve_heavy(
        &mut self,
        act: Active,
        plan: &crate::cec::Cleansed,
        anchor: &Anchor,
        value: Value,
        round: usize,
    ) -> Result<(DistRelation, usize)> {
        let a = anchor.attribute;
        let order: Vec<EdgeId> = act.rels.keys().copied().collect();
        let refs: Vec<&DistRelation> = order.iter().map(|e| &act.rels[e]).collect();
        let scattered = self.cluster.scatter_balanced(round, &refs, &act.block)?;
        let mut rels: BTreeMap<EdgeId, DistRelation> = BTreeMap::new();
        let mut before: BTreeMap<EdgeId, usize> = BTreeMap::new();
        for (e, r) in order.into_iter().zip(scattered) {
            before.insert(e, r.stored());
            let s = r.scheme();
            let dropped = if s.contains(a) {
                r.map_local(s.without(a), |t| Some(project_tuple(s, t, s.without(a))))
            } else {
                r
            };
            rels.insert(e, dropped);
        }
        let mut r = round + 1;
        for &(small, big) in &plan.removals {
            let s = rels.remove(&small).ok_or(Error::UnknownEdge(small))?;
            let reduced = self.cluster.semi_join(r, &rels[&big], &s, &act.block)?;
            rels.insert(big, reduced);
            self.stats.semi_joins += 1;
            r += 1;
        }
        for (e, rel) in &rels {
            let orig = plan.map.unmap(*e).ok_or(Error::UnknownEdge(*e))?;
            if rel.stored() > before[&orig] {
                return Err(Error::InvariantViolation(format!("R*({e}) grew beyond R({orig}, η)")));
            }
        }
        let (res, end) = self.solve_block(&plan.cover, rels, &act.block, r)?;
        let s = res.scheme();
        let one = [value];
        let single = crate::hypergraph::AttrSet::singleton(a);
        Ok((res.map_local(s.with(a), |t| Some(merge_tuples(s, t, single, &one))), end))
    }

    #[allow(clippy::too_many_arguments)]
    fn solve_light(
        &mut self,
        act: Active,
        cover: &Cec,
        d: &crate::cec::Decomposition,
        path: &[EdgeId],
        l: f64,
        round: usize,
        audits: &mut Vec<(u64, Vec<u64>, u64)>,
    ) -> Result<(DistRelation, usize)> {
        let scheme = cover.tree().graph().vertex_set();

        let pieces: Vec<&Cec> = d.pieces().collect();
        let mut requested = Vec::with_capacity(pieces.len());
        for piece in &pieces {
            let sizes: Sizes = piece.tree().graph().edge_ids().map(|e| (e, act.rels[&e].stored() as u64)).collect();
            let c = signature_paths(piece)?;
            requested.push(allocate_config_machines(&sizes, &c, l, self.cfg.c_alloc)?);
        }
        let dims = grid_dims(&requested, act.block.len());
        let grid = act.block.grid(&dims)?;
        self.stats.grids += 1;
        let product: u64 = dims.iter().map(|&x| x as u64).product();
        audits.push((1, dims.iter().map(|&x| x as u64).collect(), act.block.len() as u64));
        debug_assert!(product as usize <= act.block.len());

        let mut outputs = Vec::with_capacity(pieces.len());
        let mut end = round + 1;
        for (j, piece) in pieces.iter().enumerate() {
            let fb = grid.factor_block(j);
            let edges: Vec<EdgeId> = piece.tree().graph().edge_ids().collect();
            let refs: Vec<&DistRelation> = edges.iter().map(|e| &act.rels[e]).collect();
            let placed = self.cluster.scatter_balanced(round, &refs, &fb)?;
            let sub: BTreeMap<EdgeId, DistRelation> = edges.into_iter().zip(placed).collect();
            let (res, finish) = self.solve_block(piece, sub, &fb, round + 1)?;
            outputs.push(res);
            end = end.max(finish);
        }

        // The signature-path relations are only needed for the final local
        // join, so they travel once the factors are in place.
        let broadcast: Vec<DistRelation> =
            path.iter().map(|e| self.cluster.broadcast(end, &act.rels[e], &act.block)).collect();
        end += 1;

        let mut out = DistRelation::new(scheme);
        for pt in grid.points() {
            let m = pt[0];
            let mut rels: Vec<Relation> = outputs
                .iter()
                .map(|o| Relation::new(o.scheme(), o.at_machine(m)))
                .collect::<Result<_>>()?;
            rels.extend(broadcast.iter().map(|b| Relation::new(b.scheme(), b.at_machine(m))).collect::<Result<Vec<_>>>()?);
            out.push(pt.clone(), join_all(rels).into_tuples());
        }
        Ok((out, end))
    }
}

/// Machines handed to each configuration.
struct Allocation {
    blocks: Vec<Block>,
    /// Machines per configuration; fractional when configurations share machines.
    shares: Vec<f64>,
    /// Machines available over machines requested.
    scale: f64,
}

/// Splits a block among configurations in proportion to their requests.
/// With at least one machine per configuration the shares are integers
/// (largest remainder, each at least 1); otherwise the configurations are
/// laid out on a line of machines and neighbours share boundary machines.
fn apportion(block: &Block, requested: &[u64]) -> Result<Allocation> {
    let n = requested.len();
    let b = block.len();
    let total: u64 = requested.iter().sum();
    let scale = b as f64 / total as f64;
    if n <= b {
        let spare = (b - n) as u64;
        let mut shares: Vec<u64> = requested.iter().map(|&r| 1 + spare * r / total).collect();
        let mut left = b as u64 - shares.iter().sum::<u64>();
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by_key(|&i| (std::cmp::Reverse((spare * requested[i]) % total), i));
        for &i in order.iter().cycle() {
            if left == 0 {
                break;
            }
            shares[i] += 1;
            left -= 1;
        }
        let mut start = 0usize;
        let mut blocks = Vec::with_capacity(n);
        for &s in &shares {
            blocks.push(block.slice(start..start + s as usize)?);
            start += s as usize;
        }
        return Ok(Allocation { blocks, shares: shares.into_iter().map(|s| s as f64).collect(), scale });
    }
    let mut blocks = Vec::with_capacity(n);
    let mut shares = Vec::with_capacity(n);
    let mut start = 0.0f64;
    for &r in requested {
        let len = r as f64 * scale;
        let lo = (start.floor() as usize).min(b - 1);
        let hi = ((start + len).ceil() as usize).clamp(lo + 1, b);
        blocks.push(block.slice(lo..hi)?);
        shares.push(len);
        start += len;
    }
    Ok(Allocation { blocks, shares, scale })
}

/// Grid dimensions proportional to the requested machine counts whose product fits in `machines`.
fn grid_dims(requested: &[u64], machines: usize) -> Vec<usize> {
    let t = requested.len();
    if t == 0 {
        return Vec::new();
    }
    let prod: f64 = requested.iter().map(|&r| r as f64).product();
    let mu = (machines as f64 / prod).powf(1.0 / t as f64);
    let mut dims: Vec<usize> = requested.iter().map(|&r| ((r as f64 * mu).floor() as usize).max(1)).collect();
    while dims.iter().product::<usize>() > machines {
        let j = (0..t).filter(|&j| dims[j] > 1).max_by_key(|&j| dims[j]).unwrap();
        dims[j] -= 1;
    }
    loop {
        let p: usize = dims.iter().product();
        let best = (0..t)
            .filter(|&j| p / dims[j] * (dims[j] + 1) <= machines)
            .max_by(|&x, &y| {
                let rx = requested[x] as f64 / dims[x] as f64;
                let ry = requested[y] as f64 / dims[y] as f64;
                rx.total_cmp(&ry).then(y.cmp(&x))
            });
        match best {
            Some(j) => dims[j] += 1,
            None => return dims,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hypergraph::AttrSet;

    #[test]
    fn distinct_values_split_into_intervals() {
        let table = FrequencyTable { attribute: 0, counts: (0..100).map(|v| (v, 1)).collect() };
        let cfgs = split_table(&table, 10.0);
        assert!(cfgs.iter().all(|c| !c.is_heavy()));
        assert_eq!(cfgs.len(), 10);
        assert!(cfgs.iter().all(|c| c.frequency == 10));
    }

    #[test]
    fn single_dominant_value_is_the_only_heavy() {
        let mut counts: BTreeMap<Value, u64> = (0..5).map(|v| (v, 1)).collect();
        counts.insert(7, 500);
        let cfgs = split_table(&FrequencyTable { attribute: 0, counts }, 20.0);
        assert_eq!(cfgs.iter().filter(|c| c.is_heavy()).count(), 1);
    }

    #[test]
    fn router_covers_domain() {
        let mut counts: BTreeMap<Value, u64> = (0..30).map(|v| (v, 1)).collect();
        counts.insert(12, 50);
        let cfgs = split_table(&FrequencyTable { attribute: 0, counts }, 10.0);
        let r = Router::new(&cfgs);
        assert!(cfgs[r.route(12)].is_heavy());
        assert!(!cfgs[r.route(u64::MAX)].is_heavy());
        assert!(!cfgs[r.route(13)].is_heavy());
    }

    #[test]
    fn apportion_integer_and_shared() {
        let block = Block::physical(10);
        let a = apportion(&block, &[1, 3, 6]).unwrap();
        assert_eq!(a.blocks.iter().map(Block::len).sum::<usize>(), 10);
        assert!(a.blocks.iter().all(|b| b.len() >= 1));
        let small = Block::physical(2);
        let s = apportion(&small, &[4, 4, 4, 4]).unwrap();
        assert_eq!(s.blocks.len(), 4);
        assert!((s.shares.iter().sum::<f64>() - 2.0).abs() < 1e-9);
    }

    #[test]
    fn grid_dims_fit() {
        assert_eq!(grid_dims(&[4, 4], 16), vec![4, 4]);
        let d = grid_dims(&[100, 1, 3], 12);
        assert!(d.iter().product::<usize>() <= 12);
        assert!(d[0] >= d[2]);
        assert_eq!(grid_dims(&[5], 3), vec![3]);
    }

    #[test]
    fn constants_override() {
        let c = EngineConfig::default().with_overrides("c_load=3, c_cfg=2").unwrap();
        assert_eq!((c.c_load, c.c_alloc, c.c_cfg), (3.0, 4.0, 2.0));
        assert!(EngineConfig::default().with_overrides("c_x=1").is_err());
        assert!(EngineConfig::default().with_overrides("c_load=-1").is_err());
    }

    #[test]
    fn two_relation_chain() {
        let g = crate::hypergraph::Hypergraph::from_schemes(&["AB", "BC"]).unwrap();
        let mut rels = BTreeMap::new();
        rels.insert(0, Relation::new(AttrSet::from_ids([0, 1]), vec![vec![1, 2]]).unwrap());
        rels.insert(1, Relation::new(AttrSet::from_ids([1, 2]), vec![vec![2, 3]]).unwrap());
        let inst = Instance::new(g, rels).unwrap();
        for p in [1, 2, 4] {
            let sol = run(&inst, None, p, &EngineConfig::default()).unwrap();
            assert_eq!(sol.collect().tuples(), &[vec![1, 2, 3]]);
        }
    }
}
