//! Scenario files and JSON-lines run reports.
//!
//! A scenario is a flat TOML document:
//!
//! ```toml
//! taxonomy = "bundled"            # or "balanced:4:5", or a file path
//! network = "net.xml"             # or generate one with gen_* keys
//! gen_registries = 30
//! query_domain = "forecast"
//! query_weights = "availability:0.4,throughput:0.2,response_time_ms:0.2,cost:0.2"
//! query_level = 0.8
//! methods = ["bees", "sweep"]
//! seeds = [1, 2, 3]               # or seed_range = [1, 50] (inclusive)
//! failures = ["reg-003.s01@0", "reg-003.s01@10"]
//! ```
//!
//! Relative paths resolve against the scenario file's directory.

use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::discovery::{
    ga_discover, select_in, sweep_and_select, discover_and_select, DiscoveryError, DiscoveryQuery, DiscoveryResult,
};
use crate::network::{
    default_attributes, generate_network, AdjacencyModel, AttributeDecl, GeneratorParams, NetworkError, PeerNetwork,
    ServiceId,
};
use crate::optimizer::{BeesParams, GaParams};
use crate::qos::QosWeights;
use crate::substitution::{substitute, EquivalenceCache, SubstitutionError, SubstitutionRequest, Tick, DEFAULT_TTL};
use crate::taxonomy::{ConceptId, Taxonomy, TaxonomyError};

#[derive(Debug, Error)]
pub enum ScenarioError {
    #[error("cannot read `{path}`: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("scenario syntax: {0}")]
    Syntax(String),
    #[error("scenario: {0}")]
    Invalid(String),
    #[error(transparent)]
    Taxonomy(#[from] TaxonomyError),
    #[error(transparent)]
    Network(#[from] NetworkError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Bees,
    Sweep,
    Ga,
}

impl Method {
    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "bees" => Some(Method::Bees),
            "sweep" => Some(Method::Sweep),
            "ga" => Some(Method::Ga),
            _ => None,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Method::Bees => "bees",
            Method::Sweep => "sweep",
            Method::Ga => "ga",
        }
    }
}

/// Raw document shape.
#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct ScenarioFile {
    taxonomy: Option<String>,
    network: Option<String>,
    gen_registries: Option<usize>,
    gen_services_min: Option<usize>,
    gen_services_max: Option<usize>,
    gen_attributes: Option<String>,
    gen_adjacency: Option<String>,
    gen_k: Option<usize>,
    gen_unique_domains: Option<bool>,
    gen_seed: Option<u64>,
    query_domain: String,
    query_weights: Option<String>,
    query_level: Option<f64>,
    methods: Option<Vec<String>>,
    bees_n: Option<usize>,
    bees_m: Option<usize>,
    bees_e: Option<usize>,
    bees_nsp: Option<usize>,
    bees_nep: Option<usize>,
    bees_ngh: Option<f64>,
    bees_shrink: Option<f64>,
    bees_stlim: Option<usize>,
    bees_max_iterations: Option<usize>,
    ga_population: Option<usize>,
    ga_crossover: Option<f64>,
    ga_mutation: Option<f64>,
    ga_tournament: Option<usize>,
    ga_generations: Option<usize>,
    seeds: Option<Vec<u64>>,
    seed_range: Option<[u64; 2]>,
    failures: Option<Vec<String>>,
    cache_ttl: Option<Tick>,
    cache_capacity: Option<usize>,
    output: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Failure {
    pub service: ServiceId,
    pub tick: Tick,
}

/// A fully resolved scenario.
#[derive(Debug, Clone)]
pub struct Scenario {
    pub taxonomy: Taxonomy,
    pub network: PeerNetwork,
    pub query: DiscoveryQuery,
    pub methods: Vec<Method>,
    pub bees: BeesParams,
    pub ga: GaParams,
    pub seeds: Vec<u64>,
    /// Sorted by tick; equal ticks keep file order.
    pub failures: Vec<Failure>,
    pub cache_ttl: Tick,
    pub cache_capacity: Option<usize>,
    pub output: Option<PathBuf>,
}

fn read(path: &Path) -> Result<String, ScenarioError> {
    fs::read_to_string(path).map_err(|source| ScenarioError::Io {
        path: path.to_path_buf(),
        source,
    })
}

fn invalid<T>(msg: impl Into<String>) -> Result<T, ScenarioError> {
    Err(ScenarioError::Invalid(msg.into()))
}

/// Resolves a taxonomy source: `bundled` (or none), `balanced:<branching>:<levels>`,
/// or a file path relative to `base`.
pub fn load_taxonomy(source: Option<&str>, base: &Path) -> Result<Taxonomy, ScenarioError> {
    match source {
        None | Some("bundled") => Ok(Taxonomy::bundled()),
        Some(s) if s.starts_with("balanced:") => {
            let parts: Vec<&str> = s["balanced:".len()..].split(':').collect();
            let nums: Vec<usize> = parts.iter().filter_map(|p| p.parse().ok()).collect();
            match nums.as_slice() {
                [b, l] if parts.len() == 2 && *b >= 1 && *l >= 1 && b.pow(*l as u32 - 1) <= 1_000_000 => {
                    Ok(Taxonomy::balanced(*b, *l))
                }
                _ => invalid(format!("taxonomy `{s}`: expected balanced:<branching>:<levels>")),
            }
        }
        Some(path) => Ok(Taxonomy::load(&read(&base.join(path))?)?),
    }
}

impl Scenario {
    pub fn load(path: &Path) -> Result<Self, ScenarioError> {
        let text = read(path)?;
        let base = path.parent().unwrap_or_else(|| Path::new("."));
        Self::parse(&text, base)
    }

    /// Parses scenario text; relative paths resolve against `base`.
    pub fn parse(text: &str, base: &Path) -> Result<Self, ScenarioError> {
        let f: ScenarioFile = toml::from_str(text).map_err(|e| ScenarioError::Syntax(e.message().to_string()))?;
        let taxonomy = load_taxonomy(f.taxonomy.as_deref(), base)?;

        let gen_keys = f.gen_registries.is_some()
            || f.gen_services_min.is_some()
            || f.gen_services_max.is_some()
            || f.gen_attributes.is_some()
            || f.gen_adjacency.is_some()
            || f.gen_k.is_some()
            || f.gen_unique_domains.is_some()
            || f.gen_seed.is_some();
        let network = match (&f.network, gen_keys) {
            (Some(_), true) => return invalid("give either `network` or gen_* keys, not both"),
            (Some(p), false) => PeerNetwork::load(&read(&base.join(p))?, &taxonomy)?,
            (None, _) => {
                let d = GeneratorParams::default();
                let attributes = match &f.gen_attributes {
                    Some(s) => AttributeDecl::parse_list(s)?,
                    None => default_attributes(),
                };
                let k = f.gen_k.unwrap_or(4);
                let adjacency = match f.gen_adjacency.as_deref() {
                    None | Some("proximity") => AdjacencyModel::TaxonomyProximity { k },
                    Some("isolated") => AdjacencyModel::Isolated,
                    Some(o) => return invalid(format!("gen_adjacency `{o}`: expected proximity or isolated")),
                };
                let params = GeneratorParams {
                    registry_count: f.gen_registries.unwrap_or(d.registry_count),
                    services_min: f.gen_services_min.unwrap_or(d.services_min),
                    services_max: f.gen_services_max.unwrap_or(d.services_max),
                    attributes,
                    adjacency,
                    unique_domains: f.gen_unique_domains.unwrap_or(d.unique_domains),
                };
                generate_network(&params, &taxonomy, f.gen_seed.unwrap_or(0))?.0
            }
        };

        let wanted_domain = ConceptId::new(&f.query_domain)?;
        taxonomy.depth(&wanted_domain)?;
        let weights = match &f.query_weights {
            Some(s) => QosWeights::parse(s),
            None => QosWeights::uniform(network.attributes()),
        }
        .map_err(|e| ScenarioError::Invalid(e.to_string()))?;
        weights
            .check_covers(network.attributes())
            .map_err(|e| ScenarioError::Invalid(e.to_string()))?;
        let requested_level = f.query_level.unwrap_or(0.5);
        if !(0.0..=1.0).contains(&requested_level) {
            return invalid(format!("query_level {requested_level} outside [0, 1]"));
        }

        let mut methods = Vec::new();
        for m in f.methods.unwrap_or_else(|| vec!["bees".into()]) {
            match Method::parse(&m) {
                Some(x) if !methods.contains(&x) => methods.push(x),
                Some(_) => return invalid(format!("method `{m}` listed twice")),
                None => return invalid(format!("unknown method `{m}` (bees, sweep, ga)")),
            }
        }
        if methods.is_empty() {
            return invalid("methods is empty");
        }
        methods.sort();

        let bd = BeesParams::default();
        let bees = BeesParams {
            n: f.bees_n.unwrap_or(bd.n),
            m: f.bees_m.unwrap_or(bd.m),
            e: f.bees_e.unwrap_or(bd.e),
            nsp: f.bees_nsp.unwrap_or(bd.nsp),
            nep: f.bees_nep.unwrap_or(bd.nep),
            ngh: f.bees_ngh.unwrap_or(bd.ngh),
            shrink: f.bees_shrink.unwrap_or(bd.shrink),
            stlim: f.bees_stlim.unwrap_or(bd.stlim),
            max_iterations: f.bees_max_iterations.unwrap_or(bd.max_iterations),
            target_fitness: None,
        };
        bees.validate().map_err(|e| ScenarioError::Invalid(e.to_string()))?;
        let gd = GaParams::default();
        let ga = GaParams {
            population_size: f.ga_population.unwrap_or(gd.population_size),
            crossover_rate: f.ga_crossover.unwrap_or(gd.crossover_rate),
            mutation_rate: f.ga_mutation.unwrap_or(gd.mutation_rate),
            tournament_size: f.ga_tournament.unwrap_or(gd.tournament_size),
            max_generations: f.ga_generations.unwrap_or(gd.max_generations),
            target_fitness: None,
        };
        ga.validate().map_err(|e| ScenarioError::Invalid(e.to_string()))?;

        let seeds = match (f.seeds, f.seed_range) {
            (Some(_), Some(_)) => return invalid("give either `seeds` or `seed_range`, not both"),
            (Some(s), None) => s,
            (None, Some([a, b])) if a <= b => (a..=b).collect(),
            (None, Some([a, b])) => return invalid(format!("seed_range [{a}, {b}] is empty")),
            (None, None) => vec![0],
        };
        if seeds.is_empty() {
            return invalid("seeds is empty");
        }

        let mut failures = Vec::new();
        for item in f.failures.unwrap_or_default() {
            let Some((svc, tick)) = item.rsplit_once('@') else {
                return invalid(format!("failure `{item}`: expected <service-id>@<tick>"));
            };
            let tick = tick
                .trim()
                .parse()
                .map_err(|_| ScenarioError::Invalid(format!("failure `{item}`: bad tick")))?;
            failures.push(Failure {
                service: ServiceId::new(svc.trim())?,
                tick,
            });
        }
        failures.sort_by_key(|x| x.tick);

        let cache_ttl = f.cache_ttl.unwrap_or(DEFAULT_TTL);
        if cache_ttl == 0 {
            return invalid("cache_ttl must be positive");
        }
        if f.cache_capacity == Some(0) {
            return invalid("cache_capacity must be positive");
        }

        Ok(Scenario {
            taxonomy,
            network,
            query: DiscoveryQuery {
                wanted_domain,
                weights,
                requested_level,
            },
            methods,
            bees,
            ga,
            seeds,
            failures,
            cache_ttl,
            cache_capacity: f.cache_capacity,
            output: f.output.map(|p| base.join(p)),
        })
    }
}

/// One discovery run.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DiscoveryRecord {
    pub seed: u64,
    pub method: Method,
    pub registry_id: String,
    pub similarity: f64,
    pub service_id: String,
    pub qos_score: f64,
    pub probes: u64,
    pub iterations: usize,
    pub stop_reason: String,
    pub wall_time_ms: f64,
}

fn run_one(s: &Scenario, method: Method, seed: u64) -> Result<DiscoveryResult, DiscoveryError> {
    let (net, t, q) = (&s.network, &s.taxonomy, &s.query);
    match method {
        Method::Bees => discover_and_select(net, t, q, &s.bees, seed),
        Method::Sweep => sweep_and_select(net, t, q),
        Method::Ga => select_in(net, q, ga_discover(net, t, q, &s.ga, seed)?, None),
    }
}

/// Runs every configured method for every seed. Records are ordered by
/// (seed, method).
pub fn run_discovery(s: &Scenario) -> Result<Vec<DiscoveryRecord>, DiscoveryError> {
    let mut seeds = s.seeds.clone();
    seeds.sort_unstable();
    seeds.dedup();
    let mut out = Vec::with_capacity(seeds.len() * s.methods.len());
    for &seed in &seeds {
        for &method in &s.methods {
            let start = Instant::now();
            let r = run_one(s, method, seed)?;
            let wall_time_ms = start.elapsed().as_secs_f64() * 1e3;
            log::debug!("seed {seed} {}: {} probes", method.as_str(), r.trace.total_probes);
            out.push(DiscoveryRecord {
                seed,
                method,
                registry_id: r.registry_id.to_string(),
                similarity: r.similarity,
                service_id: r.selected_service.id.to_string(),
                qos_score: r.qos_score,
                probes: r.trace.total_probes,
                iterations: r.trace.search_iterations(),
                stop_reason: r.trace.stop_reason.to_string(),
                wall_time_ms,
            });
        }
    }
    Ok(out)
}

/// One failure injection.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SubstitutionRecord {
    pub seed: u64,
    pub tick: Tick,
    pub failed_id: String,
    pub substitute_id: String,
    pub source: String,
    pub probes: u64,
    pub wall_time_ms: f64,
}

/// Replays the failure injections once per seed, each seed with a fresh
/// cache.
pub fn run_substitution(s: &Scenario) -> Result<Vec<SubstitutionRecord>, SubstitutionError> {
    let mut seeds = s.seeds.clone();
    seeds.sort_unstable();
    seeds.dedup();
    let mut out = Vec::new();
    for seed in seeds {
        out.extend(replay_failures(s, seed)?.0);
    }
    Ok(out)
}

/// Replays the failure injections for one seed and returns the final cache.
/// Expired entries are purged before every injection.
pub fn replay_failures(
    s: &Scenario,
    seed: u64,
) -> Result<(Vec<SubstitutionRecord>, EquivalenceCache), SubstitutionError> {
    let mut cache = EquivalenceCache::new(s.cache_ttl, s.cache_capacity)?;
    let request = SubstitutionRequest {
        params: &s.bees,
        weights: &s.query.weights,
        requested_level: s.query.requested_level,
        seed,
    };
    let mut out = Vec::with_capacity(s.failures.len());
    for f in &s.failures {
        let start = Instant::now();
        cache.evict_expired(f.tick);
        let sub = substitute(&f.service, &mut cache, &s.network, &s.taxonomy, &request, f.tick)?;
        out.push(SubstitutionRecord {
            seed,
            tick: f.tick,
            failed_id: f.service.to_string(),
            substitute_id: sub.service.id.to_string(),
            source: sub.source.as_str().to_string(),
            probes: sub.probes,
            wall_time_ms: start.elapsed().as_secs_f64() * 1e3,
        });
    }
    Ok((out, cache))
}

/// Nearest-rank quantile of sorted data; `q` in [0, 1].
pub fn quantile(sorted: &[f64], q: f64) -> f64 {
    if sorted.is_empty() {
        return f64::NAN;
    }
    let rank = (q * sorted.len() as f64).ceil() as usize;
    sorted[rank.clamp(1, sorted.len()) - 1]
}

/// Per-method aggregate over discovery records.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MethodSummary {
    pub method: Method,
    pub runs: usize,
    pub probes_p50: f64,
    pub probes_p90: f64,
    pub probes_max: f64,
    pub similarity_min: f64,
    pub similarity_mean: f64,
    pub exact_match_rate: f64,
}

pub fn summarize(records: &[DiscoveryRecord]) -> Vec<MethodSummary> {
    let mut methods: Vec<Method> = records.iter().map(|r| r.method).collect();
    methods.sort();
    methods.dedup();
    methods
        .into_iter()
        .map(|method| {
            let rs: Vec<&DiscoveryRecord> = records.iter().filter(|r| r.method == method).collect();
            let mut probes: Vec<f64> = rs.iter().map(|r| r.probes as f64).collect();
            probes.sort_by(f64::total_cmp);
            let n = rs.len() as f64;
            MethodSummary {
                method,
                runs: rs.len(),
                probes_p50: quantile(&probes, 0.5),
                probes_p90: quantile(&probes, 0.9),
                probes_max: quantile(&probes, 1.0),
                similarity_min: rs.iter().map(|r| r.similarity).fold(f64::INFINITY, f64::min),
                similarity_mean: rs.iter().map(|r| r.similarity).sum::<f64>() / n,
                exact_match_rate: rs.iter().filter(|r| r.similarity >= 1.0).count() as f64 / n,
            }
        })
        .collect()
}

/// Serializes records as JSON lines.
pub fn to_json_lines<T: Serialize>(records: &[T]) -> String {
    let mut out = String::new();
    for r in records {
        out.push_str(&serde_json::to_string(r).expect("records serialize"));
        out.push('\n');
    }
    out
}
