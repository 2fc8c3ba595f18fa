//! Query specifications, CSV relations and JSON summaries.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::cec::{edge_cover, signature_paths, Cec, Clustering};
use crate::engine::{run, EngineConfig, RunReport};
use crate::error::{Error, Result};
use crate::gen::{generate_relation, GeneratorSpec};
use crate::hypergraph::{build_join_tree, validate_tree, EdgeId, HyperedgeTree, Hypergraph};
use crate::oracle::oracle_yannakakis;
use crate::relation::{Instance, Relation, Value};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Source {
    File(PathBuf),
    Generator { generator: GeneratorSpec },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RelationSpec {
    pub name: String,
    pub scheme: Vec<String>,
    #[serde(default)]
    pub source: Option<Source>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct QuerySpec {
    pub attributes: Vec<String>,
    pub relations: Vec<RelationSpec>,
    /// Used for relations without their own source.
    #[serde(default)]
    pub generator: Option<GeneratorSpec>,
}

impl QuerySpec {
    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn hypergraph(&self) -> Result<Hypergraph> {
        if self.relations.is_empty() {
            return Err(Error::InvalidHypergraph("a query needs at least one relation".into()));
        }
        let edges: Vec<(String, Vec<String>)> =
            self.relations.iter().map(|r| (r.name.clone(), r.scheme.clone())).collect();
        Hypergraph::new(&self.attributes, &edges)
    }

    /// Spec for a hypergraph whose relations are all generated by `generator`.
    pub fn generated(g: &Hypergraph, generator: GeneratorSpec) -> Self {
        QuerySpec {
            attributes: g.attributes().iter().map(|a| a.name.clone()).collect(),
            relations: g
                .edges()
                .iter()
                .map(|e| RelationSpec {
                    name: e.name.clone(),
                    scheme: e.attrs.iter().map(|a| g.attribute_name(a).to_string()).collect(),
                    source: None,
                })
                .collect(),
            generator: Some(generator),
        }
    }

    /// Materializes every relation. File paths are relative to `base`;
    /// `seed` replaces the seed of every generator.
    pub fn instance(&self, base: &Path, seed: Option<u64>) -> Result<Instance> {
        let g = self.hypergraph()?;
        let mut rels = BTreeMap::new();
        for (spec, e) in self.relations.iter().zip(g.edge_ids()) {
            let r = match spec.source.as_ref() {
                Some(Source::File(p)) => read_csv(&base.join(p), &g, e)?,
                Some(Source::Generator { generator }) => generate_relation(&g, e, &reseed(generator, seed))?,
                None => {
                    let gen = self.generator.as_ref().ok_or_else(|| {
                        Error::Parse(format!("relation {} has no source and the query has no generator", spec.name))
                    })?;
                    generate_relation(&g, e, &reseed(gen, seed))?
                }
            };
            rels.insert(e, r);
        }
        Instance::new(g, rels)
    }
}

fn reseed(g: &GeneratorSpec, seed: Option<u64>) -> GeneratorSpec {
    GeneratorSpec { seed: seed.unwrap_or(g.seed), ..g.clone() }
}

pub fn read_query(path: &Path) -> Result<QuerySpec> {
    QuerySpec::from_json(&fs::read_to_string(path)?)
}

/// Reads a CSV whose header names the attributes of edge `e`, in any order.
pub fn read_csv(path: &Path, g: &Hypergraph, e: EdgeId) -> Result<Relation> {
    let scheme = g.edge(e)?.attrs;
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_path(path).map_err(csv_err)?;
    let header = rdr.headers().map_err(csv_err)?.clone();
    let mut cols = Vec::with_capacity(header.len());
    for name in header.iter() {
        let a = g.attribute_id(name).ok_or_else(|| Error::UnknownAttribute(name.to_string()))?;
        cols.push(scheme.position(a).ok_or_else(|| {
            Error::Parse(format!("{}: column {name} is not in the scheme of {}", path.display(), g.edge_name(e)))
        })?);
    }
    if cols.len() != scheme.len() {
        return Err(Error::Parse(format!("{}: header does not match the scheme of {}", path.display(), g.edge_name(e))));
    }
    let mut tuples = Vec::new();
    for rec in rdr.records() {
        let rec = rec.map_err(csv_err)?;
        let mut t = vec![0; scheme.len()];
        for (field, &c) in rec.iter().zip(&cols) {
            t[c] = field
                .parse::<Value>()
                .map_err(|_| Error::Parse(format!("{}: `{field}` is not an unsigned integer", path.display())))?;
        }
        tuples.push(t);
    }
    Relation::new(scheme, tuples)
}

/// Writes a header of attribute names in id order, then one row per tuple.
pub fn write_csv(path: &Path, g: &Hypergraph, r: &Relation) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(csv_err)?;
    w.write_record(r.scheme().iter().map(|a| g.attribute_name(a))).map_err(csv_err)?;
    for t in r.tuples() {
        w.write_record(t.iter().map(|v| v.to_string())).map_err(csv_err)?;
    }
    w.flush()?;
    Ok(())
}

fn csv_err(e: csv::Error) -> Error {
    Error::Parse(e.to_string())
}

/// Parent array indexed by relation position: `[null, 0, 0, 1]`.
pub fn read_parents(path: &Path) -> Result<Vec<Option<usize>>> {
    Ok(serde_json::from_str(&fs::read_to_string(path)?)?)
}

pub fn read_tree(path: &Path, g: &Hypergraph) -> Result<HyperedgeTree> {
    HyperedgeTree::from_parent_array(g.clone(), &read_parents(path)?)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct EdgeSummary {
    pub name: String,
    pub attrs: Vec<String>,
}

/// Hypergraph, tree, cover and clustering by name.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct QuerySummary {
    pub attributes: Vec<String>,
    pub edges: Vec<EdgeSummary>,
    pub root: String,
    /// Parent of every non-root edge.
    pub tree: BTreeMap<String, String>,
    pub cover: Vec<String>,
    pub clustering: Vec<Vec<String>>,
}

pub fn summarize(f: &Cec, c: &Clustering) -> QuerySummary {
    let t = f.tree();
    let g = t.graph();
    let name = |e: EdgeId| g.edge_name(e).to_string();
    QuerySummary {
        attributes: g.attributes().iter().map(|a| a.name.clone()).collect(),
        edges: g
            .edges()
            .iter()
            .map(|e| EdgeSummary {
                name: e.name.clone(),
                attrs: e.attrs.iter().map(|a| g.attribute_name(a).to_string()).collect(),
            })
            .collect(),
        root: name(t.root()),
        tree: t.parents().iter().filter_map(|(&e, p)| p.map(|p| (name(e), name(p)))).collect(),
        cover: f.members().iter().map(|&e| name(e)).collect(),
        clustering: c.clusters.iter().map(|cl| cl.edges.iter().map(|&e| name(e)).collect()).collect(),
    }
}

/// The JSON report of one run.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Report {
    pub query: QuerySummary,
    pub run: RunReport,
    /// Whether the result matched the oracle; absent unless requested.
    pub verify: Option<bool>,
}

/// Options of [`run_spec`].
#[derive(Clone, Debug)]
pub struct RunOptions {
    pub machines: usize,
    pub seed: Option<u64>,
    pub verify: bool,
    pub constants: EngineConfig,
    /// Parent array replacing the built join tree.
    pub parents: Option<Vec<Option<usize>>>,
}

impl RunOptions {
    pub fn new(machines: usize) -> Self {
        RunOptions { machines, seed: None, verify: false, constants: EngineConfig::default(), parents: None }
    }
}

/// Builds (or checks) the join tree, materializes the relations, runs the
/// engine and optionally the oracle.
pub fn run_spec(spec: &QuerySpec, base: &Path, opts: &RunOptions) -> Result<Report> {
    let g = spec.hypergraph()?;
    let tree = match &opts.parents {
        Some(p) => HyperedgeTree::from_parent_array(g.clone(), p)?,
        None => build_join_tree(&g).ok_or(Error::Cyclic)?,
    };
    if !validate_tree(&tree) {
        return Err(Error::InvalidTree("connectedness requirement violated".into()));
    }
    let inst = spec.instance(base, opts.seed)?;
    let sol = run(&inst, Some(&tree), opts.machines, &opts.constants)?;
    let f = edge_cover(&tree.cleaning_plan().0);
    let c = signature_paths(&f)?;
    let verify = if opts.verify { Some(oracle_yannakakis(&inst, &tree)? == sol.collect()) } else { None };
    Ok(Report { query: summarize(&f, &c), run: sol.report, verify })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gen::Skew;

    #[test]
    fn csv_round_trip_with_permuted_header() {
        let dir = tempfile::tempdir().unwrap();
        let g = Hypergraph::from_schemes(&["AB"]).unwrap();
        let r = Relation::new(g.attrs(0), vec![vec![1, 2], vec![3, 4]]).unwrap();
        let p = dir.path().join("ab.csv");
        write_csv(&p, &g, &r).unwrap();
        assert_eq!(read_csv(&p, &g, 0).unwrap(), r);
        fs::write(&p, "B,A\n2,1\n").unwrap();
        assert_eq!(read_csv(&p, &g, 0).unwrap().tuples(), &[vec![1, 2]]);
        fs::write(&p, "A,C\n2,1\n").unwrap();
        assert!(read_csv(&p, &g, 0).is_err());
    }

    #[test]
    fn spec_round_trip() {
        let g = Hypergraph::from_schemes(&["AB", "BC"]).unwrap();
        let spec = QuerySpec::generated(&g, GeneratorSpec::new(4, 10, Skew::Zipf { s: 1.2 }, 20));
        let text = serde_json::to_string(&spec).unwrap();
        let back = QuerySpec::from_json(&text).unwrap();
        assert_eq!(back, spec);
        let a = back.instance(Path::new("."), None).unwrap();
        let b = back.instance(Path::new("."), Some(5)).unwrap();
        assert_eq!(a.graph(), &g);
        assert_ne!(a, b);
    }

    #[test]
    fn file_sources_resolve_against_base() {
        let dir = tempfile::tempdir().unwrap();
        fs::write(dir.path().join("r.csv"), "A,B\n1,2\n").unwrap();
        let spec = QuerySpec::from_json(r#"{"attributes":["A","B"],"relations":[{"name":"R","scheme":["A","B"],"source":"r.csv"}]}"#).unwrap();
        let inst = spec.instance(dir.path(), None).unwrap();
        assert_eq!(inst.input_size(), 1);
    }
}
