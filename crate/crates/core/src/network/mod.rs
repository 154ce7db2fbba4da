//! Simulated peer-to-peer environment: registries (communities) of services,
//! an undirected peer adjacency graph, and a probe counter used as the cost
//! metric for discovery.

mod generate;
mod xml;

pub use generate::{generate_network, AdjacencyModel, GeneratorParams};

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::sync::atomic::{AtomicU64, Ordering};

use thiserror::Error;

use crate::taxonomy::{ConceptId, Taxonomy, TaxonomyError};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum NetworkError {
    #[error("schema violation: {0}")]
    SchemaViolation(String),
    #[error("registry `{registry}` names domain `{domain}`, which is not in the taxonomy")]
    UnknownDomainConcept { registry: RegistryId, domain: String },
    #[error("service id `{0}` is used more than once")]
    DuplicateServiceId(ServiceId),
    #[error("adjacency is not symmetric between `{0}` and `{1}`")]
    AsymmetricAdjacency(RegistryId, RegistryId),
    #[error("unknown registry `{0}`")]
    UnknownRegistry(RegistryId),
    #[error("invalid generator parameters: {0}")]
    InvalidGeneratorParams(String),
    #[error(transparent)]
    Taxonomy(#[from] TaxonomyError),
}

macro_rules! token_id {
    ($(#[$meta:meta])* $name:ident) => {
        $(#[$meta])*
        #[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
        pub struct $name(String);

        impl $name {
            /// Rejects empty ids and ids containing whitespace.
            pub fn new(raw: &str) -> Result<Self, NetworkError> {
                if raw.is_empty() || raw.chars().any(char::is_whitespace) {
                    return Err(NetworkError::SchemaViolation(format!(
                        "invalid {} {raw:?}",
                        stringify!($name)
                    )));
                }
                Ok($name(raw.to_string()))
            }

            pub fn as_str(&self) -> &str {
                &self.0
            }
        }

        impl fmt::Display for $name {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str(&self.0)
            }
        }
    };
}

token_id!(
    /// Registry (community) identifier.
    RegistryId
);
token_id!(
    /// Network-wide unique service identifier.
    ServiceId
);

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Direction {
    Higher,
    Lower,
}

impl Direction {
    pub fn suffix(self) -> &'static str {
        match self {
            Direction::Higher => "higher",
            Direction::Lower => "lower",
        }
    }
}

/// A declared QoS attribute and whether larger raw values are better.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AttributeDecl {
    pub name: String,
    pub direction: Direction,
}

impl AttributeDecl {
    pub fn new(name: &str, direction: Direction) -> Self {
        AttributeDecl {
            name: name.to_string(),
            direction,
        }
    }

    /// Parses the `name:higher,name:lower` declaration list.
    pub fn parse_list(text: &str) -> Result<Vec<Self>, NetworkError> {
        let mut out: Vec<AttributeDecl> = Vec::new();
        for item in text.split(',').map(str::trim).filter(|s| !s.is_empty()) {
            let (name, dir) = item.rsplit_once(':').ok_or_else(|| {
                NetworkError::SchemaViolation(format!("attribute `{item}` lacks a :higher/:lower suffix"))
            })?;
            let direction = match dir {
                "higher" => Direction::Higher,
                "lower" => Direction::Lower,
                other => {
                    return Err(NetworkError::SchemaViolation(format!(
                        "attribute `{name}` has direction `{other}`; expected higher or lower"
                    )))
                }
            };
            if !is_xml_name(name) {
                return Err(NetworkError::SchemaViolation(format!("invalid attribute name `{name}`")));
            }
            if out.iter().any(|a| a.name == name) {
                return Err(NetworkError::SchemaViolation(format!("attribute `{name}` declared twice")));
            }
            out.push(AttributeDecl::new(name, direction));
        }
        if out.is_empty() {
            return Err(NetworkError::SchemaViolation("no QoS attributes declared".into()));
        }
        Ok(out)
    }
}

pub(crate) fn is_xml_name(name: &str) -> bool {
    let mut chars = name.chars();
    matches!(chars.next(), Some(c) if c.is_ascii_alphabetic() || c == '_')
        && chars.all(|c| c.is_ascii_alphanumeric() || c == '_' || c == '-' || c == '.')
}

/// The default attribute set used by the generator.
pub fn default_attributes() -> Vec<AttributeDecl> {
    vec![
        AttributeDecl::new("availability", Direction::Higher),
        AttributeDecl::new("throughput", Direction::Higher),
        AttributeDecl::new("response_time_ms", Direction::Lower),
        AttributeDecl::new("cost", Direction::Lower),
    ]
}

pub type QosAttributes = BTreeMap<String, f64>;

#[derive(Debug, Clone, PartialEq)]
pub struct ServiceDescriptor {
    pub id: ServiceId,
    pub name: String,
    pub url: String,
    pub qos: QosAttributes,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Registry {
    pub id: RegistryId,
    pub domain: ConceptId,
    pub services: Vec<ServiceDescriptor>,
}

/// Registries plus symmetric peer adjacency.
///
/// `probe_registry` takes `&self` and bumps an atomic counter, so concurrent
/// probes are counted exactly.
#[derive(Debug)]
pub struct PeerNetwork {
    attributes: Vec<AttributeDecl>,
    registries: BTreeMap<RegistryId, Registry>,
    adjacency: BTreeMap<RegistryId, BTreeSet<RegistryId>>,
    probes: AtomicU64,
}

impl Clone for PeerNetwork {
    fn clone(&self) -> Self {
        PeerNetwork {
            attributes: self.attributes.clone(),
            registries: self.registries.clone(),
            adjacency: self.adjacency.clone(),
            probes: AtomicU64::new(self.probe_count()),
        }
    }
}

/// Structural equality; the probe counter is run state and is ignored.
impl PartialEq for PeerNetwork {
    fn eq(&self, other: &Self) -> bool {
        self.attributes == other.attributes
            && self.registries == other.registries
            && self.adjacency == other.adjacency
    }
}

impl PeerNetwork {
    /// Validates and assembles a network. Every registry's domain must be in
    /// `taxonomy`; `adjacency` must be symmetric, self-loop free and only
    /// mention known registries. Registries missing from `adjacency` are
    /// isolated.
    pub fn new(
        attributes: Vec<AttributeDecl>,
        registries: Vec<Registry>,
        adjacency: BTreeMap<RegistryId, BTreeSet<RegistryId>>,
        taxonomy: &Taxonomy,
    ) -> Result<Self, NetworkError> {
        if attributes.is_empty() {
            return Err(NetworkError::SchemaViolation("no QoS attributes declared".into()));
        }
        let mut by_id = BTreeMap::new();
        let mut service_ids = BTreeSet::new();
        for reg in registries {
            if !taxonomy.contains(&reg.domain) {
                return Err(NetworkError::UnknownDomainConcept {
                    registry: reg.id.clone(),
                    domain: reg.domain.to_string(),
                });
            }
            for svc in &reg.services {
                if !service_ids.insert(svc.id.clone()) {
                    return Err(NetworkError::DuplicateServiceId(svc.id.clone()));
                }
                check_service_attributes(svc, &attributes)?;
            }
            if by_id.contains_key(&reg.id) {
                return Err(NetworkError::SchemaViolation(format!("registry `{}` declared twice", reg.id)));
            }
            by_id.insert(reg.id.clone(), reg);
        }
        let mut full: BTreeMap<RegistryId, BTreeSet<RegistryId>> =
            by_id.keys().map(|id| (id.clone(), BTreeSet::new())).collect();
        for (a, peers) in &adjacency {
            if !by_id.contains_key(a) {
                return Err(NetworkError::UnknownRegistry(a.clone()));
            }
            for b in peers {
                if a == b {
                    return Err(NetworkError::SchemaViolation(format!("registry `{a}` lists itself as a peer")));
                }
                if !by_id.contains_key(b) {
                    return Err(NetworkError::UnknownRegistry(b.clone()));
                }
                if !adjacency.get(b).is_some_and(|back| back.contains(a)) {
                    return Err(NetworkError::AsymmetricAdjacency(a.clone(), b.clone()));
                }
                full.get_mut(a).expect("known").insert(b.clone());
            }
        }
        Ok(PeerNetwork {
            attributes,
            registries: by_id,
            adjacency: full,
            probes: AtomicU64::new(0),
        })
    }

    /// Parses and validates a network file.
    pub fn load(document: &str, taxonomy: &Taxonomy) -> Result<Self, NetworkError> {
        xml::parse(document, taxonomy)
    }

    /// Serializes to the network file format. Output is canonical:
    /// registries and edges appear in id order.
    pub fn to_xml(&self) -> String {
        xml::emit(self)
    }

    pub fn attributes(&self) -> &[AttributeDecl] {
        &self.attributes
    }

    pub fn len(&self) -> usize {
        self.registries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.registries.is_empty()
    }

    /// Registry ids in ascending order.
    pub fn registry_ids(&self) -> impl Iterator<Item = &RegistryId> {
        self.registries.keys()
    }

    /// Read access without probe accounting, for oracles and the control
    /// module. Discovery must go through [`PeerNetwork::probe_registry`].
    pub fn registry(&self, rid: &RegistryId) -> Option<&Registry> {
        self.registries.get(rid)
    }

    pub fn registries(&self) -> impl Iterator<Item = &Registry> {
        self.registries.values()
    }

    pub fn service_count(&self) -> usize {
        self.registries.values().map(|r| r.services.len()).sum()
    }

    /// Registry holding service `sid`, with the service itself.
    pub fn find_service(&self, sid: &ServiceId) -> Option<(&Registry, &ServiceDescriptor)> {
        self.registries
            .values()
            .find_map(|r| r.services.iter().find(|s| &s.id == sid).map(|s| (r, s)))
    }

    /// Returns a registry's description and counts one probe.
    pub fn probe_registry(&self, rid: &RegistryId) -> Result<&Registry, NetworkError> {
        let reg = self
            .registries
            .get(rid)
            .ok_or_else(|| NetworkError::UnknownRegistry(rid.clone()))?;
        self.probes.fetch_add(1, Ordering::Relaxed);
        Ok(reg)
    }

    pub fn probe_count(&self) -> u64 {
        self.probes.load(Ordering::Relaxed)
    }

    pub fn reset_probes(&self) {
        self.probes.store(0, Ordering::Relaxed);
    }

    pub fn neighbors_of(&self, rid: &RegistryId) -> Result<&BTreeSet<RegistryId>, NetworkError> {
        self.adjacency
            .get(rid)
            .ok_or_else(|| NetworkError::UnknownRegistry(rid.clone()))
    }

    /// Undirected edges `(a, b)` with `a < b`, in order.
    pub fn edges(&self) -> Vec<(&RegistryId, &RegistryId)> {
        self.adjacency
            .iter()
            .flat_map(|(a, peers)| peers.iter().filter(move |b| a < *b).map(move |b| (a, b)))
            .collect()
    }

    /// Control module: files `svc` under the registry whose domain is most
    /// similar to `svc_domain` when that similarity reaches `threshold`,
    /// otherwise opens a new registry for `svc_domain`. Ties go to the
    /// smallest registry id. Returns the receiving registry's id.
    pub fn classify_service(
        &mut self,
        taxonomy: &Taxonomy,
        svc: ServiceDescriptor,
        svc_domain: &ConceptId,
        threshold: f64,
    ) -> Result<RegistryId, NetworkError> {
        if self.find_service(&svc.id).is_some() {
            return Err(NetworkError::DuplicateServiceId(svc.id));
        }
        check_service_attributes(&svc, &self.attributes)?;
        taxonomy.depth(svc_domain)?;
        let mut best: Option<(&RegistryId, f64)> = None;
        for reg in self.registries.values() {
            let sim = taxonomy.wu_palmer_similarity(svc_domain, &reg.domain)?;
            if best.is_none_or(|(_, b)| sim > b) {
                best = Some((&reg.id, sim));
            }
        }
        let target = match best {
            Some((id, sim)) if sim >= threshold => id.clone(),
            _ => {
                let id = self.fresh_registry_id(svc_domain);
                self.registries.insert(
                    id.clone(),
                    Registry {
                        id: id.clone(),
                        domain: svc_domain.clone(),
                        services: Vec::new(),
                    },
                );
                self.adjacency.insert(id.clone(), BTreeSet::new());
                id
            }
        };
        self.registries
            .get_mut(&target)
            .expect("target exists")
            .services
            .push(svc);
        Ok(target)
    }

    fn fresh_registry_id(&self, domain: &ConceptId) -> RegistryId {
        let base = format!("reg-{domain}");
        let mut candidate = base.clone();
        let mut n = 2;
        while self.registries.contains_key(&RegistryId(candidate.clone())) {
            candidate = format!("{base}-{n}");
            n += 1;
        }
        RegistryId(candidate)
    }
}

fn check_service_attributes(svc: &ServiceDescriptor, attributes: &[AttributeDecl]) -> Result<(), NetworkError> {
    for attr in attributes {
        match svc.qos.get(&attr.name) {
            Some(v) if v.is_finite() => {}
            Some(v) => {
                return Err(NetworkError::SchemaViolation(format!(
                    "service `{}` has non-finite `{}` = {v}",
                    svc.id, attr.name
                )))
            }
            None => {
                return Err(NetworkError::SchemaViolation(format!(
                    "service `{}` lacks QoS attribute `{}`",
                    svc.id, attr.name
                )))
            }
        }
    }
    if let Some(extra) = svc.qos.keys().find(|k| !attributes.iter().any(|a| &a.name == *k)) {
        return Err(NetworkError::SchemaViolation(format!(
            "service `{}` carries undeclared attribute `{extra}`",
            svc.id
        )));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    pub(crate) fn taxonomy() -> Taxonomy {
        Taxonomy::load("a\troot\nb\troot\na1\ta\na2\ta\nb1\tb\n").unwrap()
    }

    fn c(s: &str) -> ConceptId {
        ConceptId::new(s).unwrap()
    }

    fn rid(s: &str) -> RegistryId {
        RegistryId::new(s).unwrap()
    }

    fn svc(id: &str) -> ServiceDescriptor {
        ServiceDescriptor {
            id: ServiceId::new(id).unwrap(),
            name: format!("{id} service"),
            url: format!("http://{id}.example"),
            qos: BTreeMap::from([("cost".to_string(), 1.0)]),
        }
    }

    fn reg(id: &str, domain: &str, services: &[&str]) -> Registry {
        Registry {
            id: rid(id),
            domain: c(domain),
            services: services.iter().map(|s| svc(s)).collect(),
        }
    }

    fn attrs() -> Vec<AttributeDecl> {
        vec![AttributeDecl::new("cost", Direction::Lower)]
    }

    fn net(regs: Vec<Registry>, edges: &[(&str, &str)]) -> PeerNetwork {
        let mut adj: BTreeMap<RegistryId, BTreeSet<RegistryId>> = BTreeMap::new();
        for (a, b) in edges {
            adj.entry(rid(a)).or_default().insert(rid(b));
            adj.entry(rid(b)).or_default().insert(rid(a));
        }
        PeerNetwork::new(attrs(), regs, adj, &taxonomy()).unwrap()
    }

    #[test]
    fn probe_accounting() {
        let n = net(vec![reg("r1", "a1", &["s1"])], &[]);
        assert_eq!(n.probe_count(), 0);
        assert_eq!(n.probe_registry(&rid("r1")).unwrap().domain, c("a1"));
        assert_eq!(n.probe_count(), 1);
        n.probe_registry(&rid("r1")).unwrap();
        assert_eq!(n.probe_count(), 2);
        assert_eq!(
            n.probe_registry(&rid("zz")).unwrap_err(),
            NetworkError::UnknownRegistry(rid("zz"))
        );
        assert_eq!(n.probe_count(), 2);
    }

    #[test]
    fn concurrent_probes_are_all_counted() {
        let n = net(vec![reg("r1", "a1", &["s1"]), reg("r2", "b1", &["s2"])], &[]);
        std::thread::scope(|scope| {
            for t in 0..8 {
                let n = &n;
                scope.spawn(move || {
                    let id = if t % 2 == 0 { rid("r1") } else { rid("r2") };
                    for _ in 0..500 {
                        n.probe_registry(&id).unwrap();
                    }
                });
            }
        });
        assert_eq!(n.probe_count(), 4000);
    }

    #[test]
    fn neighbors() {
        let n = net(
            vec![reg("r1", "a1", &["s1"]), reg("r2", "a2", &["s2"]), reg("r3", "b1", &[])],
            &[("r1", "r2")],
        );
        assert!(n.neighbors_of(&rid("r3")).unwrap().is_empty());
        assert!(n.neighbors_of(&rid("r1")).unwrap().contains(&rid("r2")));
        assert!(n.neighbors_of(&rid("r2")).unwrap().contains(&rid("r1")));
        assert!(n.neighbors_of(&rid("nope")).is_err());
        assert_eq!(n.edges(), vec![(&rid("r1"), &rid("r2"))]);
    }

    #[test]
    fn construction_errors() {
        let t = taxonomy();
        let err = PeerNetwork::new(attrs(), vec![reg("r1", "zzz", &[])], BTreeMap::new(), &t).unwrap_err();
        assert!(matches!(err, NetworkError::UnknownDomainConcept { .. }));
        let err = PeerNetwork::new(
            attrs(),
            vec![reg("r1", "a1", &["s1"]), reg("r2", "a2", &["s1"])],
            BTreeMap::new(),
            &t,
        )
        .unwrap_err();
        assert_eq!(err, NetworkError::DuplicateServiceId(ServiceId::new("s1").unwrap()));
        let one_way = BTreeMap::from([(rid("r1"), BTreeSet::from([rid("r2")]))]);
        let err = PeerNetwork::new(
            attrs(),
            vec![reg("r1", "a1", &[]), reg("r2", "a2", &[])],
            one_way,
            &t,
        )
        .unwrap_err();
        assert_eq!(err, NetworkError::AsymmetricAdjacency(rid("r1"), rid("r2")));
    }

    #[test]
    fn classify_into_matching_registry() {
        let t = taxonomy();
        let mut n = net(vec![reg("r1", "a1", &["s1"]), reg("r2", "b1", &["s2"])], &[]);
        let got = n.classify_service(&t, svc("s3"), &c("a1"), 0.5).unwrap();
        assert_eq!(got, rid("r1"));
        assert_eq!(n.service_count(), 3);
    }

    #[test]
    fn classify_opens_new_registry_below_threshold() {
        let t = taxonomy();
        let mut n = net(vec![reg("r1", "a1", &["s1"])], &[]);
        // sim(b1, a1) = 2·1/(3+3) = 1/3 < 0.5
        let got = n.classify_service(&t, svc("s9"), &c("b1"), 0.5).unwrap();
        assert_eq!(got, rid("reg-b1"));
        assert_eq!(n.len(), 2);
        assert!(n.neighbors_of(&got).unwrap().is_empty());
        let err = n.classify_service(&t, svc("s9"), &c("b1"), 0.5).unwrap_err();
        assert_eq!(err, NetworkError::DuplicateServiceId(ServiceId::new("s9").unwrap()));
        // a second new registry for the same domain gets a distinct id
        let got = n.classify_service(&t, svc("s10"), &c("b1"), 1.1).unwrap();
        assert_eq!(got, rid("reg-b1-2"));
    }

    #[test]
    fn classify_tie_takes_smallest_id() {
        let t = taxonomy();
        let mut n = net(vec![reg("r2", "a2", &[]), reg("r1", "a1", &[])], &[]);
        // a1 and a2 are equally similar to a
        let got = n.classify_service(&t, svc("s1"), &c("a"), 0.5).unwrap();
        assert_eq!(got, rid("r1"));
    }
}
