use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use acyclic_mpc::engine::EngineConfig;
use acyclic_mpc::gen::{generate, GeneratorSpec, Skew};
use acyclic_mpc::io::{read_parents, read_query, run_spec, write_csv, QuerySpec, RelationSpec, RunOptions, Source};
use acyclic_mpc::{Error, Hypergraph};
use anyhow::Context;
use clap::{Args, Parser, Subcommand};
use log::{info, warn};

#[derive(Parser)]
#[command(name = "acyclic-mpc", version, about = "Acyclic joins on a simulated MPC cluster")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a query on a simulated cluster and print a JSON report.
    Run(RunArgs),
    /// Write generated relations as CSV files plus a query.json that reads them.
    Gen(GenArgs),
}

#[derive(Args)]
struct RunArgs {
    /// Query spec (JSON).
    #[arg(long)]
    query: PathBuf,
    /// Number of simulated machines.
    #[arg(long, default_value_t = 16, value_parser = clap::value_parser!(u64).range(1..))]
    machines: u64,
    /// Replaces the seed of every generator in the spec.
    #[arg(long)]
    seed: Option<u64>,
    /// Compare the result against the sequential oracle.
    #[arg(long)]
    verify: bool,
    /// Write the report here instead of stdout.
    #[arg(long)]
    report: Option<PathBuf>,
    /// Constant overrides, e.g. `c_load=4,c_alloc=4,c_cfg=4`.
    #[arg(long)]
    constants: Option<String>,
    /// JSON parent array over the relations, replacing the built join tree.
    #[arg(long)]
    tree: Option<PathBuf>,
}

#[derive(Args)]
struct GenArgs {
    /// Query spec whose generators produce the data.
    #[arg(long, conflicts_with = "schemes", required_unless_present = "schemes")]
    query: Option<PathBuf>,
    /// Comma-separated schemes of single-letter attributes, e.g. `AB,BC`.
    #[arg(long)]
    schemes: Option<String>,
    #[arg(long)]
    seed: Option<u64>,
    /// Tuples per relation (with --schemes).
    #[arg(long, default_value_t = 100)]
    size: usize,
    /// `uniform`, `zipf:<s>` or `heavy:<fraction>` (with --schemes).
    #[arg(long, default_value = "uniform")]
    skew: Skew,
    /// Values are drawn from 0..domain (with --schemes).
    #[arg(long, default_value_t = 100)]
    domain: u64,
    /// Join tuples planted in every relation (with --schemes).
    #[arg(long, default_value_t = 0)]
    planted: usize,
    /// Output directory.
    #[arg(long)]
    out: PathBuf,
}

/// Exit statuses.
enum Failure {
    Internal(anyhow::Error),
    Input(anyhow::Error),
    Mismatch,
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::Cyclic
            | Error::Parse(_)
            | Error::Io(_)
            | Error::Json(_)
            | Error::UnknownAttribute(_)
            | Error::InvalidHypergraph(_)
            | Error::InvalidTree(_) => Failure::Input(e.into()),
            _ => Failure::Internal(e.into()),
        }
    }
}

fn input(e: impl Into<anyhow::Error>) -> Failure {
    Failure::Input(e.into())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("ACYCLIC_MPC_LOG", "warn")).init();
    let cli = Cli::parse();
    let outcome = match cli.command {
        Command::Run(args) => run_query(&args),
        Command::Gen(args) => gen(&args),
    };
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Internal(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
        Err(Failure::Input(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
        Err(Failure::Mismatch) => {
            eprintln!("error: result differs from the oracle");
            ExitCode::from(3)
        }
    }
}

fn base_dir(path: &Path) -> PathBuf {
    path.parent().map(Path::to_path_buf).unwrap_or_default()
}

fn run_query(args: &RunArgs) -> Result<(), Failure> {
    let spec = read_query(&args.query).with_context(|| format!("reading {}", args.query.display())).map_err(input)?;
    let mut opts = RunOptions::new(args.machines as usize);
    opts.seed = args.seed;
    opts.verify = args.verify;
    if let Some(s) = &args.constants {
        opts.constants = EngineConfig::default().with_overrides(s)?;
    }
    if let Some(p) = &args.tree {
        opts.parents = Some(read_parents(p)?);
    }
    let report = run_spec(&spec, &base_dir(&args.query), &opts)?;
    info!("max load {} against L = {:.3}", report.run.load.max_load, report.run.profile.l);

    let text = serde_json::to_string_pretty(&report).map_err(|e| Failure::Internal(e.into()))? + "\n";
    match &args.report {
        Some(p) => fs::write(p, text).with_context(|| format!("writing {}", p.display())).map_err(input)?,
        None => print!("{text}"),
    }

    if report.verify == Some(false) {
        return Err(Failure::Mismatch);
    }
    if !report.run.within_load_bound {
        warn!("load ratio {:.2} is above c_load = {}", report.run.load.ratio, opts.constants.c_load);
    }
    if !report.run.violations.is_empty() {
        return Err(Failure::Internal(anyhow::anyhow!("run violated invariants: {}", report.run.violations.join("; "))));
    }
    Ok(())
}

fn gen(args: &GenArgs) -> Result<(), Failure> {
    let (g, inst) = match (&args.query, &args.schemes) {
        (Some(q), _) => {
            let spec = read_query(q).with_context(|| format!("reading {}", q.display())).map_err(input)?;
            (spec.hypergraph()?, spec.instance(&base_dir(q), args.seed)?)
        }
        (None, Some(s)) => {
            let schemes: Vec<&str> = s.split(',').map(str::trim).collect();
            let g = Hypergraph::from_schemes(&schemes)?;
            let spec = GeneratorSpec {
                planted: args.planted,
                ..GeneratorSpec::new(args.seed.unwrap_or(0), args.size, args.skew, args.domain)
            };
            let inst = generate(&g, &spec)?;
            (g, inst)
        }
        (None, None) => unreachable!("clap requires --query or --schemes"),
    };
    fs::create_dir_all(&args.out).with_context(|| format!("creating {}", args.out.display())).map_err(input)?;
    let mut relations = Vec::new();
    for (i, e) in g.edges().iter().enumerate() {
        let file = format!("{i:02}_{}.csv", e.name);
        write_csv(&args.out.join(&file), &g, inst.relation(i))?;
        relations.push(RelationSpec {
            name: e.name.clone(),
            scheme: e.attrs.iter().map(|a| g.attribute_name(a).to_string()).collect(),
            source: Some(Source::File(file.into())),
        });
    }
    let spec = QuerySpec {
        attributes: g.attributes().iter().map(|a| a.name.clone()).collect(),
        relations,
        generator: None,
    };
    let text = serde_json::to_string_pretty(&spec).map_err(|e| Failure::Internal(e.into()))? + "\n";
    fs::write(args.out.join("query.json"), text).map_err(input)?;
    info!("wrote {} relations to {}", g.num_edges(), args.out.display());
    Ok(())
}
