//! Python bindings. Hypergraphs are passed as lists of schemes such as
//! `["AB", "BC"]`, one single-letter attribute per character.

use std::path::PathBuf;

use acyclic_mpc::engine::EngineConfig;
use acyclic_mpc::gen::{GeneratorSpec, Skew};
use acyclic_mpc::io::{run_spec, QuerySpec, RunOptions};
use acyclic_mpc::load::induced_load_sizes;
use acyclic_mpc::{build_join_tree, edge_cover, signature_paths, Error, HyperedgeTree, Hypergraph};
use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;

fn py_err(e: Error) -> PyErr {
    match e {
        Error::Cyclic | Error::Parse(_) | Error::Json(_) | Error::InvalidHypergraph(_) | Error::InvalidTree(_) => {
            PyValueError::new_err(e.to_string())
        }
        _ => PyRuntimeError::new_err(e.to_string()),
    }
}

fn graph(schemes: &[String]) -> PyResult<Hypergraph> {
    let refs: Vec<&str> = schemes.iter().map(String::as_str).collect();
    Hypergraph::from_schemes(&refs).map_err(py_err)
}

fn tree(schemes: &[String]) -> PyResult<HyperedgeTree> {
    build_join_tree(&graph(schemes)?).ok_or_else(|| py_err(Error::Cyclic))
}

fn names(t: &HyperedgeTree, ids: impl IntoIterator<Item = usize>) -> Vec<String> {
    ids.into_iter().map(|e| t.graph().edge_name(e).to_string()).collect()
}

#[pyfunction]
fn is_acyclic(schemes: Vec<String>) -> PyResult<bool> {
    Ok(build_join_tree(&graph(&schemes)?).is_some())
}

/// Names of the edges in the canonical edge cover of the built join tree.
#[pyfunction]
fn canonical_edge_cover(schemes: Vec<String>) -> PyResult<Vec<String>> {
    let t = tree(&schemes)?;
    Ok(names(&t, edge_cover(&t).members().iter().copied()))
}

/// Signature-path clusters of the cleaned query, top node first.
#[pyfunction]
fn signature_path_clusters(schemes: Vec<String>) -> PyResult<Vec<Vec<String>>> {
    let t = tree(&schemes)?.cleaning_plan().0;
    let c = signature_paths(&edge_cover(&t)).map_err(py_err)?;
    Ok(c.clusters.iter().map(|cl| names(&t, cl.edges.iter().copied())).collect())
}

/// L for a clean query with the given relation sizes.
#[pyfunction]
fn induced_load(schemes: Vec<String>, sizes: Vec<u64>, machines: usize) -> PyResult<f64> {
    let t = tree(&schemes)?;
    if !t.graph().is_clean() {
        return Err(PyValueError::new_err("induced_load expects a clean query"));
    }
    if sizes.len() != schemes.len() {
        return Err(PyValueError::new_err("one size per relation is required"));
    }
    let c = signature_paths(&edge_cover(&t)).map_err(py_err)?;
    let sizes = sizes.into_iter().enumerate().collect();
    Ok(induced_load_sizes(&sizes, &c, machines).map_err(py_err)?.l)
}

/// A query spec (JSON) whose relations are all generated.
#[pyfunction]
#[pyo3(signature = (schemes, seed=0, size=100, skew="uniform", domain=100, planted=0))]
fn generated_query(
    schemes: Vec<String>,
    seed: u64,
    size: usize,
    skew: &str,
    domain: u64,
    planted: usize,
) -> PyResult<String> {
    let skew: Skew = skew.parse().map_err(py_err)?;
    let spec = QuerySpec::generated(&graph(&schemes)?, GeneratorSpec { planted, ..GeneratorSpec::new(seed, size, skew, domain) });
    serde_json::to_string(&spec).map_err(|e| py_err(e.into()))
}

/// Runs a query spec on `machines` simulated machines and returns the JSON report.
#[pyfunction]
#[pyo3(signature = (spec, machines, seed=None, verify=false, constants=None, base_dir=None))]
fn run_query(
    py: Python<'_>,
    spec: &str,
    machines: usize,
    seed: Option<u64>,
    verify: bool,
    constants: Option<&str>,
    base_dir: Option<PathBuf>,
) -> PyResult<String> {
    if machines == 0 {
        return Err(PyValueError::new_err("machines must be at least 1"));
    }
    let spec = QuerySpec::from_json(spec).map_err(py_err)?;
    let mut opts = RunOptions::new(machines);
    opts.seed = seed;
    opts.verify = verify;
    if let Some(c) = constants {
        opts.constants = EngineConfig::default().with_overrides(c).map_err(py_err)?;
    }
    let base = base_dir.unwrap_or_default();
    let report = py.detach(|| run_spec(&spec, &base, &opts)).map_err(py_err)?;
    serde_json::to_string(&report).map_err(|e| py_err(e.into()))
}

#[pymodule]
pub fn acyclic_mpc_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_function(wrap_pyfunction!(is_acyclic, m)?)?;
    m.add_function(wrap_pyfunction!(canonical_edge_cover, m)?)?;
    m.add_function(wrap_pyfunction!(signature_path_clusters, m)?)?;
    m.add_function(wrap_pyfunction!(induced_load, m)?)?;
    m.add_function(wrap_pyfunction!(generated_query, m)?)?;
    m.add_function(wrap_pyfunction!(run_query, m)?)?;
    Ok(())
}
