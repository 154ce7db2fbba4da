use std::collections::{BTreeMap, BTreeSet};

use rand::seq::SliceRandom;
use rand::Rng;

use super::{default_attributes, AttributeDecl, NetworkError, PeerNetwork, Registry, RegistryId, ServiceDescriptor, ServiceId};
use crate::seeded_rng;
use crate::taxonomy::{ConceptId, Taxonomy};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AdjacencyModel {
    /// No peer links.
    Isolated,
    /// Each registry links to its `k` most similar peers (by domain), then
    /// links are symmetrized.
    TaxonomyProximity { k: usize },
}

#[derive(Debug, Clone, PartialEq)]
pub struct GeneratorParams {
    pub registry_count: usize,
    pub services_min: usize,
    pub services_max: usize,
    pub attributes: Vec<AttributeDecl>,
    pub adjacency: AdjacencyModel,
    /// Draw every registry's domain from a distinct leaf concept.
    pub unique_domains: bool,
}

impl Default for GeneratorParams {
    fn default() -> Self {
        GeneratorParams {
            registry_count: 10,
            services_min: 3,
            services_max: 8,
            attributes: default_attributes(),
            adjacency: AdjacencyModel::TaxonomyProximity { k: 4 },
            unique_domains: true,
        }
    }
}

impl GeneratorParams {
    fn validate(&self, taxonomy: &Taxonomy) -> Result<(), NetworkError> {
        let fail = |m: String| Err(NetworkError::InvalidGeneratorParams(m));
        if self.registry_count == 0 {
            return fail("registry_count must be at least 1".into());
        }
        if self.services_min == 0 || self.services_min > self.services_max {
            return fail(format!(
                "services per registry must satisfy 1 <= min <= max (got {}..{})",
                self.services_min, self.services_max
            ));
        }
        if self.attributes.is_empty() {
            return fail("attribute set is empty".into());
        }
        let leaves = taxonomy.leaves().len();
        if self.unique_domains && leaves < self.registry_count {
            return fail(format!(
                "{} registries with unique domains need as many leaf concepts; taxonomy has {leaves}",
                self.registry_count
            ));
        }
        Ok(())
    }
}

/// Plausible raw range for a QoS attribute, keyed by name.
fn value_range(name: &str) -> (f64, f64) {
    match name {
        "availability" | "reliability" => (0.9, 0.999),
        "throughput" => (10.0, 500.0),
        "response_time_ms" | "latency_ms" => (20.0, 2000.0),
        "cost" | "price" => (0.01, 5.0),
        _ => (0.0, 1.0),
    }
}

/// Builds a random network over `taxonomy` and its canonical file text.
/// Identical inputs give a byte-identical file.
pub fn generate_network(
    params: &GeneratorParams,
    taxonomy: &Taxonomy,
    seed: u64,
) -> Result<(PeerNetwork, String), NetworkError> {
    params.validate(taxonomy)?;
    let mut rng = seeded_rng(seed);
    let leaves: Vec<ConceptId> = taxonomy.leaves().into_iter().cloned().collect();
    let domains: Vec<ConceptId> = if params.unique_domains {
        let mut pool = leaves.clone();
        pool.shuffle(&mut rng);
        pool.truncate(params.registry_count);
        pool
    } else {
        (0..params.registry_count)
            .map(|_| leaves[rng.random_range(0..leaves.len())].clone())
            .collect()
    };

    let width = (params.registry_count - 1).to_string().len().max(3);
    let mut registries = Vec::with_capacity(params.registry_count);
    for (i, domain) in domains.into_iter().enumerate() {
        let id = RegistryId(format!("reg-{i:0width$}"));
        let count = rng.random_range(params.services_min..=params.services_max);
        let services = (0..count)
            .map(|j| {
                let qos = params
                    .attributes
                    .iter()
                    .map(|a| {
                        let (lo, hi) = value_range(&a.name);
                        let v: f64 = rng.random_range(lo..=hi);
                        (a.name.clone(), (v * 1000.0).round() / 1000.0)
                    })
                    .collect();
                ServiceDescriptor {
                    id: ServiceId(format!("{id}.s{j:02}")),
                    name: format!("{domain} service {j}"),
                    url: format!("http://{id}.example.org/s{j:02}"),
                    qos,
                }
            })
            .collect();
        registries.push(Registry { id, domain, services });
    }

    let mut adjacency: BTreeMap<RegistryId, BTreeSet<RegistryId>> = BTreeMap::new();
    if let AdjacencyModel::TaxonomyProximity { k } = params.adjacency {
        for reg in &registries {
            let mut others: Vec<(f64, &RegistryId)> = registries
                .iter()
                .filter(|o| o.id != reg.id)
                .map(|o| Ok((taxonomy.wu_palmer_similarity(&reg.domain, &o.domain)?, &o.id)))
                .collect::<Result<_, NetworkError>>()?;
            others.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.cmp(b.1)));
            for (_, peer) in others.into_iter().take(k) {
                adjacency.entry(reg.id.clone()).or_default().insert(peer.clone());
                adjacency.entry(peer.clone()).or_default().insert(reg.id.clone());
            }
        }
    }

    let net = PeerNetwork::new(params.attributes.clone(), registries, adjacency, taxonomy)?;
    let text = net.to_xml();
    Ok((net, text))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_registry_has_no_edges() {
        let t = Taxonomy::bundled();
        let p = GeneratorParams { registry_count: 1, ..Default::default() };
        let (net, _) = generate_network(&p, &t, 3).unwrap();
        assert_eq!(net.len(), 1);
        assert!(net.edges().is_empty());
    }

    #[test]
    fn proximity_gives_minimum_degree() {
        let t = Taxonomy::bundled();
        let p = GeneratorParams {
            registry_count: 5,
            adjacency: AdjacencyModel::TaxonomyProximity { k: 2 },
            ..Default::default()
        };
        for seed in 0..20 {
            let (net, _) = generate_network(&p, &t, seed).unwrap();
            for id in net.registry_ids() {
                assert!(net.neighbors_of(id).unwrap().len() >= 2);
            }
        }
    }

    #[test]
    fn deterministic_and_round_trips() {
        let t = Taxonomy::bundled();
        let p = GeneratorParams { registry_count: 12, ..Default::default() };
        let (net, text) = generate_network(&p, &t, 42).unwrap();
        let (_, again) = generate_network(&p, &t, 42).unwrap();
        assert_eq!(text, again);
        assert_eq!(PeerNetwork::load(&text, &t).unwrap(), net);
        let (_, other) = generate_network(&p, &t, 43).unwrap();
        assert_ne!(text, other);
    }

    #[test]
    fn service_counts_in_range() {
        let t = Taxonomy::bundled();
        let p = GeneratorParams { registry_count: 30, ..Default::default() };
        let (net, _) = generate_network(&p, &t, 8).unwrap();
        let domains: BTreeSet<_> = net.registries().map(|r| r.domain.clone()).collect();
        assert_eq!(domains.len(), 30);
        assert!(net.registries().all(|r| (3..=8).contains(&r.services.len())));
    }

    #[test]
    fn invalid_params() {
        let t = Taxonomy::bundled();
        let bad = [
            GeneratorParams { registry_count: 0, ..Default::default() },
            GeneratorParams { services_min: 0, ..Default::default() },
            GeneratorParams { services_min: 5, services_max: 4, ..Default::default() },
            GeneratorParams { attributes: vec![], ..Default::default() },
            GeneratorParams { registry_count: 10_000, ..Default::default() },
        ];
        for p in bad {
            assert!(matches!(
                generate_network(&p, &t, 0),
                Err(NetworkError::InvalidGeneratorParams(_))
            ));
        }
        let shared = GeneratorParams { registry_count: 500, unique_domains: false, ..Default::default() };
        assert_eq!(generate_network(&shared, &t, 0).unwrap().0.len(), 500);
    }
}
