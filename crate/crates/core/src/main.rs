use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use beehive::network::{default_attributes, generate_network, AdjacencyModel, AttributeDecl, GeneratorParams};
use beehive::scenario::{
    load_taxonomy, replay_failures, run_discovery, summarize, to_json_lines, Method, Scenario, ScenarioError,
};

const EXIT_USAGE: u8 = 2;
const EXIT_IO: u8 = 3;
const EXIT_DOMAIN: u8 = 4;

/// Bees-algorithm guided service discovery over simulated registry networks.
///
/// Log verbosity is read from BEEHIVE_LOG (error, warn, info, debug, trace).
#[derive(Parser)]
#[command(name = "beehive", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a random registry network file.
    Generate(GenerateArgs),
    /// Run discovery for every seed and method of a scenario (JSON lines).
    Discover(RunArgs),
    /// Replay a scenario's failure injections (JSON lines).
    Substitute(SubstituteArgs),
    /// Compare bees, sweep and GA on a scenario (one summary line per method).
    Bench(RunArgs),
}

#[derive(Args)]
struct Common {
    /// Output path; defaults to the scenario's `output` key, then stdout.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Suppress the summary on stderr.
    #[arg(long)]
    quiet: bool,
}

#[derive(Args)]
struct GenerateArgs {
    #[command(flatten)]
    common: Common,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 10)]
    registries: usize,
    #[arg(long, default_value_t = 3)]
    services_min: usize,
    #[arg(long, default_value_t = 8)]
    services_max: usize,
    /// `bundled`, `balanced:<branching>:<levels>` or a taxonomy file.
    #[arg(long, default_value = "bundled")]
    taxonomy: String,
    /// Comma-separated `name:higher|lower` list.
    #[arg(long)]
    attributes: Option<String>,
    /// Peer links per registry by domain proximity; 0 = no links.
    #[arg(long, default_value_t = 4)]
    k: usize,
    /// Allow several registries to share a domain.
    #[arg(long)]
    shared_domains: bool,
}

#[derive(Args)]
struct RunArgs {
    #[command(flatten)]
    common: Common,
    #[arg(long)]
    scenario: PathBuf,
    /// Run this single seed instead of the scenario's seeds.
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Args)]
struct SubstituteArgs {
    #[command(flatten)]
    run: RunArgs,
    /// Write the final equivalence cache of the last seed here.
    #[arg(long)]
    dump_cache: Option<PathBuf>,
}

struct Failure {
    code: u8,
    message: String,
}

impl Failure {
    fn new(code: u8, message: impl ToString) -> Self {
        Failure {
            code,
            message: message.to_string(),
        }
    }
}

impl From<ScenarioError> for Failure {
    fn from(e: ScenarioError) -> Self {
        let code = if matches!(e, ScenarioError::Io { .. }) { EXIT_IO } else { EXIT_USAGE };
        Failure::new(code, e)
    }
}

fn write_output(path: Option<&Path>, text: &str) -> Result<(), Failure> {
    let res = match path {
        Some(p) => fs::write(p, text),
        None => io::stdout().lock().write_all(text.as_bytes()),
    };
    res.map_err(|e| {
        let target = path.map_or("stdout".to_string(), |p| p.display().to_string());
        Failure::new(EXIT_IO, format!("cannot write {target}: {e}"))
    })
}

fn load_scenario(args: &RunArgs) -> Result<Scenario, Failure> {
    let mut s = Scenario::load(&args.scenario)?;
    if let Some(seed) = args.seed {
        s.seeds = vec![seed];
    }
    Ok(s)
}

fn output_path(common: &Common, s: &Scenario) -> Option<PathBuf> {
    common.out.clone().or_else(|| s.output.clone())
}

fn cmd_generate(a: GenerateArgs) -> Result<(), Failure> {
    let taxonomy = load_taxonomy(Some(&a.taxonomy), Path::new("."))?;
    let attributes = match &a.attributes {
        Some(s) => AttributeDecl::parse_list(s).map_err(|e| Failure::new(EXIT_USAGE, e))?,
        None => default_attributes(),
    };
    let params = GeneratorParams {
        registry_count: a.registries,
        services_min: a.services_min,
        services_max: a.services_max,
        attributes,
        adjacency: if a.k == 0 {
            AdjacencyModel::Isolated
        } else {
            AdjacencyModel::TaxonomyProximity { k: a.k }
        },
        unique_domains: !a.shared_domains,
    };
    let (net, text) = generate_network(&params, &taxonomy, a.seed).map_err(|e| Failure::new(EXIT_USAGE, e))?;
    write_output(a.common.out.as_deref(), &text)?;
    if !a.common.quiet {
        eprintln!("{} registries, {} services, {} links", net.len(), net.service_count(), net.edges().len());
    }
    Ok(())
}

fn cmd_discover(a: RunArgs) -> Result<(), Failure> {
    let s = load_scenario(&a)?;
    let records = run_discovery(&s).map_err(|e| Failure::new(EXIT_DOMAIN, e))?;
    write_output(output_path(&a.common, &s).as_deref(), &to_json_lines(&records))?;
    if !a.common.quiet {
        for m in summarize(&records) {
            eprintln!(
                "{}: runs {} probes p50 {} p90 {} max {} exact {:.3}",
                m.method.as_str(),
                m.runs,
                m.probes_p50,
                m.probes_p90,
                m.probes_max,
                m.exact_match_rate
            );
        }
    }
    Ok(())
}

fn cmd_bench(a: RunArgs) -> Result<(), Failure> {
    let mut s = load_scenario(&a)?;
    s.methods = vec![Method::Bees, Method::Sweep, Method::Ga];
    let records = run_discovery(&s).map_err(|e| Failure::new(EXIT_DOMAIN, e))?;
    write_output(output_path(&a.common, &s).as_deref(), &to_json_lines(&summarize(&records)))
}

fn cmd_substitute(a: SubstituteArgs) -> Result<(), Failure> {
    let s = load_scenario(&a.run)?;
    if s.failures.is_empty() {
        return Err(Failure::new(EXIT_USAGE, "scenario has no `failures`"));
    }
    let mut seeds = s.seeds.clone();
    seeds.sort_unstable();
    seeds.dedup();
    let mut records = Vec::new();
    let mut last_cache = None;
    for seed in seeds {
        let (recs, cache) = replay_failures(&s, seed).map_err(|e| Failure::new(EXIT_DOMAIN, e))?;
        records.extend(recs);
        last_cache = Some(cache);
    }
    write_output(output_path(&a.run.common, &s).as_deref(), &to_json_lines(&records))?;
    if let (Some(path), Some(cache)) = (&a.dump_cache, last_cache) {
        write_output(Some(path), &cache.dump())?;
    }
    if !a.run.common.quiet {
        let hits = records.iter().filter(|r| r.source == "cache-hit").count();
        eprintln!("{} substitutions, {hits} cache hits", records.len());
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("BEEHIVE_LOG", "warn")).init();
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { EXIT_USAGE } else { 0 });
        }
    };
    let result = match cli.command {
        Command::Generate(a) => cmd_generate(a),
        Command::Discover(a) => cmd_discover(a),
        Command::Substitute(a) => cmd_substitute(a),
        Command::Bench(a) => cmd_bench(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("beehive: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}
