//! Q-products, max (k,Q)-products, the induced load L and machine budgets.

use std::collections::BTreeMap;

use num_bigint::BigUint;
use num_traits::{One, ToPrimitive, Zero};
use serde::{Serialize, Serializer};

use crate::cec::Clustering;
use crate::error::{Error, Result};
use crate::hypergraph::EdgeId;
use crate::relation::Instance;

/// Relation cardinality per hyperedge.
pub type Sizes = BTreeMap<EdgeId, u64>;

pub fn q_product(inst: &Instance, k_group: &[EdgeId]) -> BigUint {
    q_product_sizes(&inst.sizes(), k_group)
}

/// Product of the sizes of the group's edges; edges without a size count as empty.
pub fn q_product_sizes(sizes: &Sizes, k_group: &[EdgeId]) -> BigUint {
    k_group.iter().map(|e| BigUint::from(sizes.get(e).copied().unwrap_or(0))).product()
}

fn cluster_maxima(sizes: &Sizes, c: &Clustering, skip_root: bool) -> Vec<u64> {
    let mut out: Vec<u64> = c
        .clusters
        .iter()
        .filter(|cl| !(skip_root && cl.is_root))
        .map(|cl| cl.edges.iter().map(|e| sizes.get(e).copied().unwrap_or(0)).max().unwrap_or(0))
        .collect();
    out.sort_unstable_by(|a, b| b.cmp(a));
    out
}

pub fn max_k_product(inst: &Instance, c: &Clustering, k: usize) -> Result<BigUint> {
    max_k_product_sizes(&inst.sizes(), c, k)
}

/// P_k: a k-group picks one edge from each of k distinct clusters, so the
/// maximum is the product of the k largest per-cluster maxima.
pub fn max_k_product_sizes(sizes: &Sizes, c: &Clustering, k: usize) -> Result<BigUint> {
    if k == 0 || k > c.len() {
        return Err(Error::KOutOfRange { k, clusters: c.len() });
    }
    Ok(cluster_maxima(sizes, c, false).into_iter().take(k).map(BigUint::from).product())
}

/// P^non_k: like P_k but over k-groups avoiding the root cluster. P^non_0 = 1,
/// and it is 0 when fewer than k non-root clusters exist.
pub fn max_k_product_non_root(sizes: &Sizes, c: &Clustering, k: usize) -> BigUint {
    if k == 0 {
        return BigUint::one();
    }
    let maxima = cluster_maxima(sizes, c, true);
    if k > maxima.len() {
        return BigUint::zero();
    }
    maxima.into_iter().take(k).map(BigUint::from).product()
}

fn big_as_string<S: Serializer>(v: &BigUint, s: S) -> std::result::Result<S::Ok, S::Error> {
    s.serialize_str(&v.to_string())
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct KRow {
    pub k: usize,
    #[serde(serialize_with = "big_as_string")]
    pub product: BigUint,
    /// (P_k / p)^(1/k)
    pub root: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct LoadProfile {
    pub clustering: Clustering,
    #[serde(rename = "L")]
    pub l: f64,
    pub per_k: Vec<KRow>,
}

pub fn induced_load(inst: &Instance, c: &Clustering, p: usize) -> Result<LoadProfile> {
    induced_load_sizes(&inst.sizes(), c, p)
}

/// L = max over k of (P_k / p)^(1/k).
pub fn induced_load_sizes(sizes: &Sizes, c: &Clustering, p: usize) -> Result<LoadProfile> {
    if p == 0 {
        return Err(Error::Precondition("at least one machine is required".into()));
    }
    let mut per_k = Vec::with_capacity(c.len());
    let mut l = 0.0f64;
    for k in 1..=c.len() {
        let product = max_k_product_sizes(sizes, c, k)?;
        let root = (big_to_f64(&product) / p as f64).powf(1.0 / k as f64);
        l = l.max(root);
        per_k.push(KRow { k, product, root });
    }
    Ok(LoadProfile { clustering: c.clone(), l, per_k })
}

/// m / p^(1/s), the ceiling L can never exceed.
pub fn load_upper_bound(m: u64, p: usize, s: usize) -> f64 {
    m as f64 / (p as f64).powf(1.0 / s.max(1) as f64)
}

fn big_to_f64(v: &BigUint) -> f64 {
    v.to_f64().unwrap_or(f64::INFINITY)
}

/// max over k of P_k / L^k, the normalized demand of a sub-instance.
pub fn normalized_demand(sizes: &Sizes, c: &Clustering, l: f64) -> Result<f64> {
    if l.is_nan() || l <= 0.0 {
        return Err(Error::Precondition(format!("load must be positive, got {l}")));
    }
    let mut best = 0.0f64;
    for k in 1..=c.len() {
        let pk = big_to_f64(&max_k_product_sizes(sizes, c, k)?);
        best = best.max(pk / l.powi(k as i32));
    }
    Ok(best)
}

/// p_η = ceil(c_alloc · (1 + max_k P_k / L^k)).
pub fn allocate_config_machines(sizes: &Sizes, c: &Clustering, l: f64, c_alloc: f64) -> Result<u64> {
    let demand = normalized_demand(sizes, c, l)?;
    Ok((c_alloc * (1.0 + demand)).ceil().max(1.0) as u64)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct LightAudit {
    pub pbar: u64,
    pub pz: Vec<u64>,
    pub p_eta: u64,
    pub product: u64,
    pub ratio: f64,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct AuditReport {
    pub total: f64,
    pub p: usize,
    pub ratio: f64,
    pub light: Vec<LightAudit>,
    pub violations: Vec<String>,
}

impl AuditReport {
    pub fn ok(&self) -> bool {
        self.violations.is_empty()
    }
}

/// Checks Σ p_η ≤ p and, per light configuration, p̄_η · Π p_{η,z} ≤ p_η.
/// Machine counts may be fractional when configurations share machines.
/// Each light entry is `(p̄_η, [p_{η,z}], p_η)`.
pub fn audit_budgets(allocs: &[f64], p: usize, light: &[(u64, Vec<u64>, u64)]) -> AuditReport {
    let total: f64 = allocs.iter().sum();
    let mut violations = Vec::new();
    if total > p as f64 * (1.0 + 1e-9) {
        violations.push(format!("configurations use {total} machines but only {p} exist"));
    }
    let light = light
        .iter()
        .map(|(pbar, pz, p_eta)| {
            let product = pz.iter().fold(*pbar, |acc, &x| acc.saturating_mul(x));
            if product > *p_eta {
                violations.push(format!("grid of {product} machines exceeds the {p_eta} allocated"));
            }
            LightAudit { pbar: *pbar, pz: pz.clone(), p_eta: *p_eta, product, ratio: product as f64 / *p_eta as f64 }
        })
        .collect();
    AuditReport { total, p, ratio: total / p.max(1) as f64, light, violations }
}
