//! Acceptance criteria. Prints one PASS/FAIL line per criterion and exits
//! non-zero if any criterion fails.

mod common;

use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;
use std::time::{Duration, Instant};

use acyclic_mpc::cec::{anchor_for_leaf, decompose, find_anchor, is_anchor, Clustering};
use acyclic_mpc::engine::{run, EngineConfig, RunReport};
use acyclic_mpc::fixtures::{running_example_graph, running_example_tree};
use acyclic_mpc::gen::{generate, Skew};
use acyclic_mpc::io::{run_spec, QuerySpec, RunOptions};
use acyclic_mpc::oracle::{oracle_min_cover, oracle_yannakakis};
use acyclic_mpc::{build_join_tree, edge_cover, signature_paths, EdgeId, HyperedgeTree, Hypergraph, Instance};
use common::{clean_tree, corpus, engine_queries, random_reverse_topological, suite_generator, walk_simplifications, SimplificationTally};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

const CORPUS_SEED: u64 = 2024;
const CORPUS_SIZE: usize = 1000;
const MACHINES: [usize; 4] = [1, 4, 16, 64];
const SEEDS: u64 = 4;
const C_LOAD: f64 = 4.0;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome { pass, detail: detail.into() }
}

fn main() {
    let corpus = corpus(CORPUS_SEED, CORPUS_SIZE);
    let mut results: Vec<(usize, &str, Outcome)> = Vec::new();

    results.push((1, "running example reproduction", criterion_1()));
    results.push((2, "canonical edge cover suite", criterion_2(&corpus)));
    results.push((3, "simplification stability suite", criterion_3(&corpus)));
    results.push((4, "k-group and super-k-group mapping suites", criterion_4(&corpus)));

    let t0 = Instant::now();
    let runs = engine_suite();
    let elapsed = t0.elapsed();
    results.push((5, "join correctness", criterion_5(&runs, elapsed)));
    results.push((6, "load bound", criterion_6(&runs)));
    results.push((7, "budget audits", criterion_7(&runs)));
    results.push((8, "configuration count", criterion_8(&runs)));
    results.push((9, "determinism", criterion_9()));

    let mut failed = 0;
    for (n, name, o) in &results {
        let tag = if o.pass { "PASS" } else { "FAIL" };
        println!("{tag} criterion {n} ({name}): {}", o.detail);
        failed += usize::from(!o.pass);
    }
    println!("acceptance: {} passed, {failed} failed", results.len() - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}

fn names(t: &HyperedgeTree, ids: impl IntoIterator<Item = EdgeId>) -> BTreeSet<String> {
    ids.into_iter().map(|e| t.graph().edge_name(e).to_string()).collect()
}

fn rendered(t: &HyperedgeTree, c: &Clustering) -> BTreeSet<BTreeSet<String>> {
    c.clusters.iter().map(|cl| cl.edges.iter().map(|&e| t.graph().format_attrs(t.attrs(e))).collect()).collect()
}

fn sets(xs: &[&[&str]]) -> BTreeSet<BTreeSet<String>> {
    xs.iter().map(|s| s.iter().map(|x| x.to_string()).collect()).collect()
}

fn criterion_1() -> Outcome {
    let t0 = Instant::now();
    let t = running_example_tree();
    let id = |n: &str| t.graph().edge_by_name(n).unwrap();
    let at = |n: &str| t.graph().attribute_id(n).unwrap();
    let mut failures = Vec::new();

    let f = edge_cover(&t);
    let want: BTreeSet<String> =
        ["ABC", "BD", "BO", "EFG", "HI", "LM", "EHJ", "HK", "HN"].iter().map(|s| s.to_string()).collect();
    if names(&t, f.members().iter().copied()) != want {
        failures.push("edge cover");
    }
    let c = signature_paths(&f).unwrap();
    let clusters = sets(&[
        &["BO", "BCE", "CEJ"],
        &["ABC", "BCE", "CEJ"],
        &["BD", "BCE", "CEJ"],
        &["EFG", "CEF", "CEJ"],
        &["HI"],
        &["EHJ"],
        &["LM", "KL"],
        &["HK"],
        &["HN"],
    ]);
    if rendered(&t, &c) != clusters {
        failures.push("signature paths");
    }
    let anchors_ok = is_anchor(&f, id("ABC"), at("C"))
        && is_anchor(&f, id("HI"), at("I"))
        && anchor_for_leaf(&f, id("BD")).is_none()
        && anchor_for_leaf(&f, id("LM")).is_none();
    if !anchors_ok {
        failures.push("anchors");
    }
    let anchor = find_anchor(&f).unwrap();
    match decompose(&f, &anchor) {
        Ok(d) if anchor.leaf == id("ABC") => {
            let z: BTreeSet<String> = names(&t, d.z_set.iter().copied());
            if z != ["BO", "BD", "CEF"].iter().map(|s| s.to_string()).collect() {
                failures.push("Z set");
            }
            let cz = |n: &str| {
                let p = &d.subtrees[&id(n)];
                rendered(p.tree(), &signature_paths(p).unwrap())
            };
            let rem = d.remainder.as_ref().unwrap();
            let ok = cz("CEF") == sets(&[&["EFG", "CEF"], &["CEJ"]])
                && cz("BO") == sets(&[&["BO"], &["BCE"]])
                && cz("BD") == sets(&[&["BD"], &["BCE"]])
                && rendered(rem.tree(), &signature_paths(rem).unwrap())
                    == sets(&[&["HI"], &["EHJ"], &["HK"], &["HN"], &["LM", "KL"]]);
            if !ok {
                failures.push("decomposition clusterings");
            }
        }
        _ => failures.push("decomposition at ABC"),
    }
    let elapsed = t0.elapsed();
    if elapsed >= Duration::from_secs(1) {
        failures.push("runtime");
    }
    if failures.is_empty() {
        outcome(true, format!("exact match in {elapsed:.2?}"))
    } else {
        outcome(false, format!("mismatch in {}", failures.join(", ")))
    }
}

fn criterion_2(corpus: &[Hypergraph]) -> Outcome {
    let t0 = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(CORPUS_SEED + 1);
    let mut violations = 0usize;
    for g in corpus {
        let t = build_join_tree(g).expect("corpus graphs are acyclic");
        let f = edge_cover(&t);
        if f.len() != oracle_min_cover(g).unwrap() {
            violations += 1;
        }
        for _ in 0..5 {
            let order = random_reverse_topological(&t, &mut rng);
            match acyclic_mpc::cec::edge_cover_with_order(&t, &order) {
                Ok(other) if other.members() == f.members() => {}
                _ => violations += 1,
            }
        }
        let tc = clean_tree(g);
        let fc = edge_cover(&tc);
        if tc.raw_leaves().iter().any(|l| !fc.contains(*l)) {
            violations += 1;
        }
        if fc.len() != oracle_min_cover(tc.graph()).unwrap() {
            violations += 1;
        }
    }
    let elapsed = t0.elapsed();
    let pass = violations == 0 && elapsed < Duration::from_secs(60);
    outcome(pass, format!("{} graphs, {violations} violations, {elapsed:.2?}", corpus.len()))
}

fn walk_corpus(corpus: &[Hypergraph], groups: bool) -> SimplificationTally {
    let mut tally = SimplificationTally::default();
    for g in corpus {
        walk_simplifications(&edge_cover(&clean_tree(g)), &mut tally, groups);
    }
    tally
}

fn criterion_3(corpus: &[Hypergraph]) -> Outcome {
    let tally = walk_corpus(corpus, false);
    outcome(
        tally.violations.is_empty(),
        format!(
            "{} simplifications, {} decompositions, {} violations{}",
            tally.simplifications,
            tally.decompositions,
            tally.violations.len(),
            tally.violations.first().map(|v| format!(" (first: {v})")).unwrap_or_default()
        ),
    )
}

fn criterion_4(corpus: &[Hypergraph]) -> Outcome {
    let tally = walk_corpus(corpus, true);
    outcome(
        tally.violations.is_empty(),
        format!(
            "{} k-groups and {} super-k-groups checked, {} violations{}",
            tally.k_groups,
            tally.super_groups,
            tally.violations.len(),
            tally.violations.first().map(|v| format!(" (first: {v})")).unwrap_or_default()
        ),
    )
}

struct SuiteRun {
    label: String,
    correct: bool,
    report: RunReport,
    clusters: usize,
}

fn skews() -> [(&'static str, Skew); 3] {
    [("uniform", Skew::Uniform), ("zipf:1.2", Skew::Zipf { s: 1.2 }), ("heavy:0.5", Skew::SingleHeavy { fraction: 0.5 })]
}

fn engine_suite() -> Vec<SuiteRun> {
    let mut out = Vec::new();
    for (name, g) in engine_queries() {
        let tree = if g == running_example_graph() { running_example_tree() } else { build_join_tree(&g).unwrap() };
        let clusters = signature_paths(&edge_cover(&clean_tree(&g))).unwrap().len();
        for (skew_name, skew) in skews() {
            for seed in 0..SEEDS {
                let inst: Instance = generate(&g, &suite_generator(&g, skew, seed)).unwrap();
                let expected = oracle_yannakakis(&inst, &tree).unwrap();
                for p in MACHINES {
                    let label = format!("{name} {skew_name} seed={seed} p={p}");
                    match run(&inst, Some(&tree), p, &EngineConfig::default()) {
                        Ok(sol) => {
                            let correct = sol.collect() == expected;
                            out.push(SuiteRun { label, correct, report: sol.report, clusters });
                        }
                        Err(e) => panic!("{label}: engine error {e}"),
                    }
                }
            }
        }
    }
    out
}

fn criterion_5(runs: &[SuiteRun], elapsed: Duration) -> Outcome {
    let wrong: Vec<&str> = runs.iter().filter(|r| !r.correct).map(|r| r.label.as_str()).collect();
    let pass = wrong.is_empty() && runs.len() >= 200 && elapsed < Duration::from_secs(300);
    let mut detail = format!("{} instances, {} mismatches, {elapsed:.2?}", runs.len(), wrong.len());
    if let Some(w) = wrong.first() {
        detail.push_str(&format!(" (first: {w})"));
    }
    outcome(pass, detail)
}

fn criterion_6(runs: &[SuiteRun]) -> Outcome {
    let mut worst = 0.0f64;
    let mut worst_label = String::new();
    let mut over = 0usize;
    let mut bound_violations = 0usize;
    let mut per_query: BTreeMap<String, f64> = BTreeMap::new();
    for r in runs {
        let ratio = r.report.load.max_load as f64 / r.report.profile.l;
        if ratio > worst {
            worst = ratio;
            worst_label = r.label.clone();
        }
        if ratio > C_LOAD {
            over += 1;
        }
        let q = r.label.split(' ').next().unwrap().to_string();
        let e = per_query.entry(q).or_insert(0.0);
        *e = e.max(ratio);
        let bound = r.report.input_size as f64 / (r.report.machines as f64).powf(1.0 / r.clusters as f64);
        if r.report.profile.l > bound * (1.0 + 1e-9) {
            bound_violations += 1;
        }
    }
    let by_query: Vec<String> = per_query.iter().map(|(q, x)| format!("{q}={x:.2}")).collect();
    outcome(
        over == 0 && bound_violations == 0,
        format!(
            "max load / L = {worst:.2} at {worst_label} (limit {C_LOAD}); {over} of {} runs over; per query: {}; L above m/p^(1/|F|) on {bound_violations} runs",
            runs.len(),
            by_query.join(", ")
        ),
    )
}

fn criterion_7(runs: &[SuiteRun]) -> Outcome {
    let mut bad = 0usize;
    let mut budget = 0.0f64;
    let mut grid = 0.0f64;
    for r in runs {
        let s = &r.report.stats;
        budget = budget.max(s.max_budget_ratio);
        grid = grid.max(s.max_grid_ratio);
        let flagged = r.report.violations.iter().any(|v| v.contains("machines but only") || v.contains("grid of"));
        if s.max_budget_ratio > 1.0 + 1e-9 || s.max_grid_ratio > 1.0 + 1e-9 || flagged {
            bad += 1;
        }
    }
    outcome(
        bad == 0,
        format!("max Σp_η/p = {budget:.3}, max grid/p_η = {grid:.3}, {bad} runs with violations"),
    )
}

fn criterion_8(runs: &[SuiteRun]) -> Outcome {
    let worst = runs.iter().map(|r| r.report.stats.max_configuration_ratio).fold(0.0, f64::max);
    let bad = runs.iter().filter(|r| r.report.stats.max_configuration_ratio > 1.0).count();
    outcome(bad == 0, format!("max configurations / (c_cfg·p) = {worst:.3}, {bad} runs over"))
}

fn report_json(g: &Hypergraph, skew: Skew, seed: u64, p: usize) -> String {
    let spec = QuerySpec::generated(g, suite_generator(g, skew, seed));
    let report = run_spec(&spec, Path::new("."), &RunOptions::new(p)).unwrap();
    serde_json::to_string_pretty(&report).unwrap()
}

fn criterion_9() -> Outcome {
    let g = running_example_graph();
    let mut differing = 0;
    let mut checked = 0;
    for (_, skew) in skews() {
        for p in [4, 16] {
            checked += 1;
            if report_json(&g, skew, 7, p) != report_json(&g, skew, 7, p) {
                differing += 1;
            }
        }
    }
    outcome(differing == 0, format!("{checked} report pairs compared, {differing} differ"))
}
