//! Registry discovery and service selection.
//!
//! Registries play the role of flower patches and discovery queries the role
//! of bees: [`discover_registry`] probes random registries, scores each by
//! the Wu–Palmer similarity between its domain and the wanted domain, ranks
//! them, explores the peer neighborhood of the best ones and stops once a
//! registry with similarity 1.0 is found. [`discover_and_select`] then picks
//! the service whose QoS score is nearest the requested level.
//!
//! [`exhaustive_discover`] is the classical sweep over every registry and
//! serves as the oracle; [`ga_discover`] is a GA-driven baseline.

mod baseline;
mod bees;

pub use baseline::{exhaustive_discover, ga_discover};
pub use bees::discover_registry;

use std::fmt;

use thiserror::Error;

use crate::network::{NetworkError, PeerNetwork, RegistryId, ServiceDescriptor, ServiceId};
use crate::optimizer::{BeesParams, OptimizerError};
use crate::qos::{nearest_qos_service, QosError, QosWeights};
use crate::taxonomy::{ConceptId, Taxonomy, TaxonomyError};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DiscoveryError {
    #[error("network has no registries")]
    EmptyNetwork,
    #[error("best registry `{0}` has no services to select from")]
    NoServicesInBestRegistry(RegistryId),
    #[error(transparent)]
    Params(#[from] OptimizerError),
    #[error(transparent)]
    Taxonomy(#[from] TaxonomyError),
    #[error(transparent)]
    Network(#[from] NetworkError),
    #[error(transparent)]
    Qos(#[from] QosError),
}

#[derive(Debug, Clone, PartialEq)]
pub struct DiscoveryQuery {
    pub wanted_domain: ConceptId,
    pub weights: QosWeights,
    pub requested_level: f64,
}

impl DiscoveryQuery {
    fn check(&self, net: &PeerNetwork, taxonomy: &Taxonomy) -> Result<(), DiscoveryError> {
        taxonomy.depth(&self.wanted_domain)?;
        self.weights.check_covers(net.attributes())?;
        if !(0.0..=1.0).contains(&self.requested_level) {
            return Err(QosError::InvalidLevel(self.requested_level).into());
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StopReason {
    SimilarityOne,
    BudgetExhausted,
    AllProbed,
}

impl StopReason {
    pub fn as_str(self) -> &'static str {
        match self {
            StopReason::SimilarityOne => "similarity-one",
            StopReason::BudgetExhausted => "budget-exhausted",
            StopReason::AllProbed => "all-probed",
        }
    }
}

impl fmt::Display for StopReason {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Registries probed in one iteration (in id order) with their similarity.
#[derive(Debug, Clone, PartialEq)]
pub struct IterationRecord {
    pub probed: Vec<(RegistryId, f64)>,
    /// Site that received the elite recruits, if any site was explored.
    pub elite: Option<RegistryId>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DiscoveryTrace {
    /// Iteration 0 is the initial random exploration.
    pub iterations: Vec<IterationRecord>,
    pub total_probes: u64,
    pub stop_reason: StopReason,
}

impl DiscoveryTrace {
    pub fn probed_ids(&self) -> impl Iterator<Item = &RegistryId> {
        self.iterations.iter().flat_map(|it| it.probed.iter().map(|(id, _)| id))
    }

    /// Number of search iterations after the initial exploration.
    pub fn search_iterations(&self) -> usize {
        self.iterations.len().saturating_sub(1)
    }
}

/// Winning registry of a discovery run.
#[derive(Debug, Clone, PartialEq)]
pub struct RegistryMatch {
    pub registry_id: RegistryId,
    pub similarity: f64,
    pub trace: DiscoveryTrace,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DiscoveryResult {
    pub registry_id: RegistryId,
    pub similarity: f64,
    pub selected_service: ServiceDescriptor,
    pub qos_score: f64,
    pub trace: DiscoveryTrace,
}

/// Probed registries ranked best first: similarity descending, id ascending.
pub(crate) fn rank<'a, I>(scored: I) -> Vec<(&'a RegistryId, f64)>
where
    I: IntoIterator<Item = (&'a RegistryId, f64)>,
{
    let mut v: Vec<_> = scored.into_iter().collect();
    v.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(b.0)));
    v
}

/// Runs [`discover_registry`] and selects the service nearest the requested
/// QoS level in the winning registry.
pub fn discover_and_select(
    net: &PeerNetwork,
    taxonomy: &Taxonomy,
    query: &DiscoveryQuery,
    params: &BeesParams,
    seed: u64,
) -> Result<DiscoveryResult, DiscoveryError> {
    discover_and_select_excluding(net, taxonomy, query, params, seed, None)
}

/// As [`discover_and_select`], but never selects `exclude`.
pub fn discover_and_select_excluding(
    net: &PeerNetwork,
    taxonomy: &Taxonomy,
    query: &DiscoveryQuery,
    params: &BeesParams,
    seed: u64,
    exclude: Option<&ServiceId>,
) -> Result<DiscoveryResult, DiscoveryError> {
    let found = discover_registry(net, taxonomy, query, params, seed)?;
    select_in(net, query, found, exclude)
}

/// Exhaustive sweep followed by the same selection step.
pub fn sweep_and_select(
    net: &PeerNetwork,
    taxonomy: &Taxonomy,
    query: &DiscoveryQuery,
) -> Result<DiscoveryResult, DiscoveryError> {
    let found = exhaustive_discover(net, taxonomy, query)?;
    select_in(net, query, found, None)
}

pub(crate) fn select_in(
    net: &PeerNetwork,
    query: &DiscoveryQuery,
    found: RegistryMatch,
    exclude: Option<&ServiceId>,
) -> Result<DiscoveryResult, DiscoveryError> {
    let registry = net
        .registry(&found.registry_id)
        .ok_or_else(|| NetworkError::UnknownRegistry(found.registry_id.clone()))?;
    let candidates: Vec<ServiceDescriptor> = registry
        .services
        .iter()
        .filter(|s| Some(&s.id) != exclude)
        .cloned()
        .collect();
    if candidates.is_empty() {
        return Err(DiscoveryError::NoServicesInBestRegistry(found.registry_id));
    }
    let (svc, score) = nearest_qos_service(&candidates, net.attributes(), &query.weights, query.requested_level)?;
    Ok(DiscoveryResult {
        registry_id: found.registry_id,
        similarity: found.similarity,
        selected_service: svc.clone(),
        qos_score: score.value(),
        trace: found.trace,
    })
}
