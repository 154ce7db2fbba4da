//! Failure substitution backed by a TTL equivalence cache.
//!
//! When a service fails, [`substitute`] first asks the [`EquivalenceCache`]
//! for a recorded equivalent. On a miss it runs discovery and selection for
//! the failed service's domain, excluding the failed service, and records the
//! pair. Time is a logical tick counter supplied by the caller.

use std::collections::BTreeMap;
use std::fmt::Write;

use thiserror::Error;

use crate::discovery::{discover_and_select_excluding, DiscoveryError, DiscoveryQuery};
use crate::network::{PeerNetwork, ServiceDescriptor, ServiceId};
use crate::optimizer::BeesParams;
use crate::qos::QosWeights;
use crate::taxonomy::Taxonomy;

/// Logical clock value.
pub type Tick = u64;

/// Default entry lifetime in ticks.
pub const DEFAULT_TTL: Tick = 1000;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SubstitutionError {
    #[error("a service cannot substitute for itself (`{0}`)")]
    SelfSubstitution(ServiceId),
    #[error("cache ttl must be positive")]
    ZeroTtl,
    #[error("failed service `{0}` is not in the network")]
    UnknownFailedService(ServiceId),
    #[error("no substitute available for `{0}`")]
    NoSubstituteAvailable(ServiceId),
    #[error(transparent)]
    Discovery(#[from] DiscoveryError),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CacheEntry {
    pub failed_id: ServiceId,
    pub substitute_id: ServiceId,
    pub inserted_at: Tick,
    pub ttl: Tick,
}

impl CacheEntry {
    pub fn expires_at(&self) -> Tick {
        self.inserted_at.saturating_add(self.ttl)
    }

    /// Live strictly before `inserted_at + ttl`.
    pub fn is_live(&self, now: Tick) -> bool {
        now < self.expires_at()
    }
}

/// Failed-service → substitute map with per-entry expiry.
///
/// Mutation needs `&mut self`; wrap it in a lock to share between threads.
#[derive(Debug, Clone, PartialEq)]
pub struct EquivalenceCache {
    entries: BTreeMap<ServiceId, CacheEntry>,
    ttl: Tick,
    capacity: Option<usize>,
}

impl EquivalenceCache {
    pub fn new(ttl: Tick, capacity: Option<usize>) -> Result<Self, SubstitutionError> {
        if ttl == 0 {
            return Err(SubstitutionError::ZeroTtl);
        }
        Ok(EquivalenceCache {
            entries: BTreeMap::new(),
            ttl,
            capacity: capacity.map(|c| c.max(1)),
        })
    }

    pub fn ttl(&self) -> Tick {
        self.ttl
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn entry(&self, failed_id: &ServiceId) -> Option<&CacheEntry> {
        self.entries.get(failed_id)
    }

    /// Live substitute for `failed_id`, if any. Never mutates.
    pub fn lookup(&self, failed_id: &ServiceId, now: Tick) -> Option<&ServiceId> {
        self.entries
            .get(failed_id)
            .filter(|e| e.is_live(now))
            .map(|e| &e.substitute_id)
    }

    /// Upserts `failed_id → substitute_id` stamped at `now`. Over capacity,
    /// drops the entry expiring first (smallest failed id on ties).
    pub fn insert(&mut self, failed_id: ServiceId, substitute_id: ServiceId, now: Tick) -> Result<(), SubstitutionError> {
        if failed_id == substitute_id {
            return Err(SubstitutionError::SelfSubstitution(failed_id));
        }
        self.entries.insert(
            failed_id.clone(),
            CacheEntry {
                failed_id,
                substitute_id,
                inserted_at: now,
                ttl: self.ttl,
            },
        );
        if let Some(cap) = self.capacity {
            while self.entries.len() > cap {
                let victim = self
                    .entries
                    .values()
                    .min_by(|a, b| a.expires_at().cmp(&b.expires_at()).then(a.failed_id.cmp(&b.failed_id)))
                    .map(|e| e.failed_id.clone())
                    .expect("non-empty");
                self.entries.remove(&victim);
            }
        }
        Ok(())
    }

    pub fn remove(&mut self, failed_id: &ServiceId) -> Option<CacheEntry> {
        self.entries.remove(failed_id)
    }

    /// Removes every entry with `now >= inserted_at + ttl`; returns how many.
    pub fn evict_expired(&mut self, now: Tick) -> usize {
        let before = self.entries.len();
        self.entries.retain(|_, e| e.is_live(now));
        before - self.entries.len()
    }

    /// Two-column `failed_id<TAB>substitute_id` listing in failed-id order.
    pub fn dump(&self) -> String {
        let mut out = String::from("failed_id\tsubstitute_id\n");
        for e in self.entries.values() {
            let _ = writeln!(out, "{}\t{}", e.failed_id, e.substitute_id);
        }
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SubstitutionSource {
    CacheHit,
    Discovered,
}

impl SubstitutionSource {
    pub fn as_str(self) -> &'static str {
        match self {
            SubstitutionSource::CacheHit => "cache-hit",
            SubstitutionSource::Discovered => "discovered",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Substitution {
    pub service: ServiceDescriptor,
    pub source: SubstitutionSource,
    /// Registry probes spent; zero on a cache hit.
    pub probes: u64,
    pub similarity: Option<f64>,
}

/// Settings shared by every substitution in a run.
#[derive(Debug, Clone)]
pub struct SubstitutionRequest<'a> {
    pub params: &'a BeesParams,
    pub weights: &'a QosWeights,
    pub requested_level: f64,
    pub seed: u64,
}

/// Finds a replacement for `failed_id` at logical time `now`.
///
/// A live cache entry whose substitute still exists short-circuits the
/// search. A stale entry (substitute gone from the network) is dropped and
/// treated as a miss.
pub fn substitute(
    failed_id: &ServiceId,
    cache: &mut EquivalenceCache,
    net: &PeerNetwork,
    taxonomy: &Taxonomy,
    request: &SubstitutionRequest<'_>,
    now: Tick,
) -> Result<Substitution, SubstitutionError> {
    let (registry, _) = net
        .find_service(failed_id)
        .ok_or_else(|| SubstitutionError::UnknownFailedService(failed_id.clone()))?;
    if let Some(sub) = cache.lookup(failed_id, now).cloned() {
        match net.find_service(&sub) {
            Some((_, svc)) => {
                return Ok(Substitution {
                    service: svc.clone(),
                    source: SubstitutionSource::CacheHit,
                    probes: 0,
                    similarity: None,
                })
            }
            None => {
                cache.remove(failed_id);
            }
        }
    }

    let query = DiscoveryQuery {
        wanted_domain: registry.domain.clone(),
        weights: request.weights.clone(),
        requested_level: request.requested_level,
    };
    let result = match discover_and_select_excluding(net, taxonomy, &query, request.params, request.seed, Some(failed_id)) {
        Ok(r) => r,
        Err(DiscoveryError::NoServicesInBestRegistry(_)) => {
            return Err(SubstitutionError::NoSubstituteAvailable(failed_id.clone()))
        }
        Err(e) => return Err(e.into()),
    };
    cache.insert(failed_id.clone(), result.selected_service.id.clone(), now)?;
    Ok(Substitution {
        service: result.selected_service,
        source: SubstitutionSource::Discovered,
        probes: result.trace.total_probes,
        similarity: Some(result.similarity),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sid(s: &str) -> ServiceId {
        ServiceId::new(s).unwrap()
    }

    #[test]
    fn lookup_respects_exclusive_boundary() {
        let mut c = EquivalenceCache::new(10, None).unwrap();
        c.insert(sid("a"), sid("b"), 0).unwrap();
        assert_eq!(c.lookup(&sid("a"), 5), Some(&sid("b")));
        assert_eq!(c.lookup(&sid("a"), 9), Some(&sid("b")));
        assert_eq!(c.lookup(&sid("a"), 10), None);
        assert_eq!(c.lookup(&sid("zz"), 0), None);
        // lookup does not evict
        assert_eq!(c.len(), 1);
    }

    #[test]
    fn insert_upserts() {
        let mut c = EquivalenceCache::new(10, None).unwrap();
        c.insert(sid("a"), sid("b"), 0).unwrap();
        assert_eq!(c.lookup(&sid("a"), 0), Some(&sid("b")));
        c.insert(sid("a"), sid("c"), 3).unwrap();
        assert_eq!(c.lookup(&sid("a"), 3), Some(&sid("c")));
        assert_eq!(c.entry(&sid("a")).unwrap().inserted_at, 3);
        assert_eq!(c.len(), 1);
        assert_eq!(
            c.insert(sid("a"), sid("a"), 4),
            Err(SubstitutionError::SelfSubstitution(sid("a")))
        );
    }

    #[test]
    fn capacity_evicts_earliest_expiry() {
        let mut c = EquivalenceCache::new(10, Some(2)).unwrap();
        c.insert(sid("x"), sid("y"), 1).unwrap();
        c.insert(sid("a"), sid("b"), 0).unwrap();
        c.insert(sid("m"), sid("n"), 2).unwrap();
        assert_eq!(c.len(), 2);
        assert_eq!(c.lookup(&sid("a"), 2), None);
        assert!(c.lookup(&sid("x"), 2).is_some());
        // equal expiry: smallest failed id goes
        let mut c = EquivalenceCache::new(10, Some(1)).unwrap();
        c.insert(sid("q"), sid("r"), 0).unwrap();
        c.insert(sid("p"), sid("r"), 0).unwrap();
        assert!(c.lookup(&sid("q"), 0).is_some());
    }

    #[test]
    fn eviction_pass() {
        let mut c = EquivalenceCache::new(10, None).unwrap();
        assert_eq!(c.evict_expired(100), 0);
        c.insert(sid("a"), sid("b"), 0).unwrap();
        c.insert(sid("c"), sid("d"), 5).unwrap();
        assert_eq!(c.evict_expired(10), 1);
        assert_eq!(c.lookup(&sid("c"), 10), Some(&sid("d")));
        assert_eq!(c.evict_expired(15), 1);
        assert!(c.is_empty());
    }

    #[test]
    fn zero_ttl_rejected() {
        assert_eq!(EquivalenceCache::new(0, None), Err(SubstitutionError::ZeroTtl));
    }

    fn fixture() -> (Taxonomy, PeerNetwork, QosWeights) {
        use crate::network::{generate_network, GeneratorParams};
        let t = Taxonomy::bundled();
        let (net, _) = generate_network(&GeneratorParams { registry_count: 20, ..Default::default() }, &t, 5).unwrap();
        let w = QosWeights::uniform(net.attributes()).unwrap();
        (t, net, w)
    }

    #[test]
    fn miss_matches_direct_discovery_and_hit_is_free() {
        let (t, net, w) = fixture();
        let p = BeesParams::default();
        let req = SubstitutionRequest { params: &p, weights: &w, requested_level: 0.7, seed: 9 };
        for reg in net.registries() {
            let failed = reg.services[0].id.clone();
            let mut cache = EquivalenceCache::new(10, None).unwrap();
            net.reset_probes();
            let got = substitute(&failed, &mut cache, &net, &t, &req, 0).unwrap();
            assert_eq!(net.probe_count(), got.probes);
            let q = DiscoveryQuery { wanted_domain: reg.domain.clone(), weights: w.clone(), requested_level: 0.7 };
            let direct = discover_and_select_excluding(&net, &t, &q, &p, 9, Some(&failed)).unwrap();
            assert_eq!(got.service, direct.selected_service);
            assert_eq!(got.source, SubstitutionSource::Discovered);
            assert_ne!(got.service.id, failed);
            assert_eq!(cache.lookup(&failed, 0), Some(&got.service.id));

            net.reset_probes();
            let hit = substitute(&failed, &mut cache, &net, &t, &req, 9).unwrap();
            assert_eq!((hit.source, hit.probes, net.probe_count()), (SubstitutionSource::CacheHit, 0, 0));
            assert_eq!(hit.service, got.service);
            let again = substitute(&failed, &mut cache, &net, &t, &req, 10).unwrap();
            assert_eq!(again.source, SubstitutionSource::Discovered);
        }
    }

    #[test]
    fn stale_substitute_is_a_miss() {
        let (t, net, w) = fixture();
        let p = BeesParams::default();
        let req = SubstitutionRequest { params: &p, weights: &w, requested_level: 0.5, seed: 1 };
        let failed = net.registries().next().unwrap().services[0].id.clone();
        let mut cache = EquivalenceCache::new(100, None).unwrap();
        cache.insert(failed.clone(), sid("gone.s99"), 0).unwrap();
        let got = substitute(&failed, &mut cache, &net, &t, &req, 1).unwrap();
        assert_eq!(got.source, SubstitutionSource::Discovered);
        assert_eq!(cache.lookup(&failed, 1), Some(&got.service.id));
        assert_eq!(
            substitute(&sid("nope"), &mut cache, &net, &t, &req, 1),
            Err(SubstitutionError::UnknownFailedService(sid("nope")))
        );
    }

    #[test]
    fn sole_service_has_no_substitute() {
        use crate::network::{default_attributes, Registry};
        let t = Taxonomy::bundled();
        let svc = ServiceDescriptor {
            id: sid("only"),
            name: "only".into(),
            url: "http://x".into(),
            qos: default_attributes().iter().map(|a| (a.name.clone(), 1.0)).collect(),
        };
        let reg = Registry {
            id: crate::network::RegistryId::new("r").unwrap(),
            domain: crate::taxonomy::ConceptId::new("forecast").unwrap(),
            services: vec![svc],
        };
        let net = PeerNetwork::new(default_attributes(), vec![reg], Default::default(), &t).unwrap();
        let w = QosWeights::uniform(net.attributes()).unwrap();
        let p = BeesParams::default();
        let req = SubstitutionRequest { params: &p, weights: &w, requested_level: 0.5, seed: 1 };
        let mut cache = EquivalenceCache::new(10, None).unwrap();
        assert_eq!(
            substitute(&sid("only"), &mut cache, &net, &t, &req, 0),
            Err(SubstitutionError::NoSubstituteAvailable(sid("only")))
        );
        assert!(cache.is_empty());
    }

    #[test]
    fn dump_lists_pairs() {
        let mut c = EquivalenceCache::new(10, None).unwrap();
        c.insert(sid("b"), sid("c"), 0).unwrap();
        c.insert(sid("a"), sid("z"), 0).unwrap();
        assert_eq!(c.dump(), "failed_id\tsubstitute_id\na\tz\nb\tc\n");
    }
}
