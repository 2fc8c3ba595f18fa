//! Seeded synthetic workloads.

use std::collections::{BTreeMap, BTreeSet};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Zipf};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hypergraph::{EdgeId, Hypergraph};
use crate::relation::{Instance, Relation, Tuple, Value};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Skew {
    Uniform,
    /// Values drawn from a Zipf law with exponent `s`.
    Zipf { s: f64 },
    /// Value 0 with probability `fraction`, uniform otherwise.
    SingleHeavy { fraction: f64 },
}

impl std::str::FromStr for Skew {
    type Err = Error;

    /// `uniform`, `zipf:1.2` or `heavy:0.5`.
    fn from_str(s: &str) -> Result<Self> {
        let (kind, arg) = s.split_once(':').unwrap_or((s, ""));
        let num = |d: f64| -> Result<f64> {
            if arg.is_empty() {
                Ok(d)
            } else {
                arg.parse().map_err(|_| Error::Parse(format!("bad skew parameter in `{s}`")))
            }
        };
        match kind {
            "uniform" | "none" => Ok(Skew::Uniform),
            "zipf" => Ok(Skew::Zipf { s: num(1.2)? }),
            "heavy" | "single-heavy" => Ok(Skew::SingleHeavy { fraction: num(0.5)? }),
            _ => Err(Error::Parse(format!("unknown skew `{s}`"))),
        }
    }
}

fn default_domain() -> u64 {
    100
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GeneratorSpec {
    pub seed: u64,
    /// Tuples per relation, before duplicate removal.
    pub size: usize,
    pub skew: Skew,
    #[serde(default = "default_domain")]
    pub domain: u64,
    /// Attributes the skew applies to; all when absent.
    #[serde(default)]
    pub skewed: Option<Vec<String>>,
    /// Full join tuples planted in every relation so the join is not empty.
    #[serde(default)]
    pub planted: usize,
}

impl GeneratorSpec {
    pub fn new(seed: u64, size: usize, skew: Skew, domain: u64) -> Self {
        GeneratorSpec { seed, size, skew, domain, skewed: None, planted: 0 }
    }

    fn validate(&self) -> Result<()> {
        if self.domain == 0 {
            return Err(Error::Precondition("domain must be positive".into()));
        }
        match self.skew {
            Skew::Zipf { s } if !(s.is_finite() && s > 0.0) => Err(Error::Precondition("zipf exponent must be positive".into())),
            Skew::SingleHeavy { fraction } if !(0.0..=1.0).contains(&fraction) => {
                Err(Error::Precondition("heavy fraction must lie in [0, 1]".into()))
            }
            _ => Ok(()),
        }
    }
}

struct Sampler {
    skew: Skew,
    domain: u64,
    zipf: Option<Zipf<f64>>,
}

impl Sampler {
    fn new(skew: Skew, domain: u64) -> Result<Self> {
        let zipf = match skew {
            Skew::Zipf { s } => {
                Some(Zipf::new(domain as f64, s).map_err(|e| Error::Precondition(format!("zipf: {e}")))?)
            }
            _ => None,
        };
        Ok(Sampler { skew, domain, zipf })
    }

    fn draw(&self, rng: &mut ChaCha8Rng, skewed: bool) -> Value {
        if !skewed {
            return rng.random_range(0..self.domain);
        }
        match self.skew {
            Skew::Uniform => rng.random_range(0..self.domain),
            Skew::Zipf { .. } => self.zipf.as_ref().unwrap().sample(rng) as Value - 1,
            Skew::SingleHeavy { fraction } => {
                if self.domain == 1 || rng.random_bool(fraction) {
                    0
                } else {
                    rng.random_range(1..self.domain)
                }
            }
        }
    }
}

fn stream(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Tuples over all attributes that every relation will contain.
fn planted_tuples(g: &Hypergraph, spec: &GeneratorSpec) -> Vec<BTreeMap<usize, Value>> {
    let mut rng = stream(spec.seed, u64::MAX);
    (0..spec.planted)
        .map(|_| g.vertex_set().iter().map(|a| (a, rng.random_range(0..spec.domain))).collect())
        .collect()
}

/// Generates relation `e`; every relation of `g` draws from its own stream, so
/// relations generated one by one match a whole-instance generation.
pub fn generate_relation(g: &Hypergraph, e: EdgeId, spec: &GeneratorSpec) -> Result<Relation> {
    spec.validate()?;
    let edge = g.edge(e)?;
    let skewed: BTreeSet<usize> = match &spec.skewed {
        None => edge.attrs.iter().collect(),
        Some(names) => names
            .iter()
            .map(|n| g.attribute_id(n).ok_or_else(|| Error::UnknownAttribute(n.clone())))
            .collect::<Result<_>>()?,
    };
    let sampler = Sampler::new(spec.skew, spec.domain)?;
    let mut rng = stream(spec.seed, e as u64);
    let mut tuples: BTreeSet<Tuple> = BTreeSet::new();
    let attrs: Vec<usize> = edge.attrs.iter().collect();
    let mut attempts = 0usize;
    while tuples.len() < spec.size && attempts < spec.size.saturating_mul(8) {
        attempts += 1;
        tuples.insert(attrs.iter().map(|a| sampler.draw(&mut rng, skewed.contains(a))).collect());
    }
    for t in planted_tuples(g, spec) {
        tuples.insert(attrs.iter().map(|a| t[a]).collect());
    }
    Relation::new(edge.attrs, tuples.into_iter().collect())
}

pub fn generate(g: &Hypergraph, spec: &GeneratorSpec) -> Result<Instance> {
    let rels = g.edge_ids().map(|e| Ok((e, generate_relation(g, e, spec)?))).collect::<Result<_>>()?;
    Instance::new(g.clone(), rels)
}
