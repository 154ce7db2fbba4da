use std::cell::RefCell;
use std::collections::BTreeMap;

use super::{rank, DiscoveryError, DiscoveryQuery, DiscoveryTrace, IterationRecord, RegistryMatch, StopReason};
use crate::network::{PeerNetwork, RegistryId};
use crate::optimizer::{ga_optimize, GaParams, GraphSpace};
use crate::taxonomy::Taxonomy;

/// Classical sweep: probes every registry once and returns the most similar
/// one (smallest id on ties).
pub fn exhaustive_discover(
    net: &PeerNetwork,
    taxonomy: &Taxonomy,
    query: &DiscoveryQuery,
) -> Result<RegistryMatch, DiscoveryError> {
    query.check(net, taxonomy)?;
    if net.is_empty() {
        return Err(DiscoveryError::EmptyNetwork);
    }
    let mut probed = Vec::with_capacity(net.len());
    for rid in net.registry_ids() {
        let reg = net.probe_registry(rid)?;
        probed.push((rid.clone(), taxonomy.wu_palmer_similarity(&query.wanted_domain, &reg.domain)?));
    }
    let (best, similarity) = {
        let ranked = rank(probed.iter().map(|(id, s)| (id, *s)));
        (ranked[0].0.clone(), ranked[0].1)
    };
    Ok(RegistryMatch {
        registry_id: best.clone(),
        similarity,
        trace: DiscoveryTrace {
            total_probes: probed.len() as u64,
            iterations: vec![IterationRecord {
                probed,
                elite: Some(best),
            }],
            stop_reason: StopReason::AllProbed,
        },
    })
}

/// GA baseline over registries. Individuals are registries, crossover
/// inherits a parent's registry and mutation jumps to a random one. Each
/// registry is probed at most once; repeated evaluations reuse the result.
/// The run stops early once similarity 1.0 is found.
pub fn ga_discover(
    net: &PeerNetwork,
    taxonomy: &Taxonomy,
    query: &DiscoveryQuery,
    params: &GaParams,
    seed: u64,
) -> Result<RegistryMatch, DiscoveryError> {
    query.check(net, taxonomy)?;
    if net.is_empty() {
        return Err(DiscoveryError::EmptyNetwork);
    }
    let ids: Vec<&RegistryId> = net.registry_ids().collect();
    let space = GraphSpace::new(ids.len(), &[]).map_err(DiscoveryError::Params)?;
    // index → (similarity, evaluation index at first probe)
    let memo: RefCell<BTreeMap<usize, (f64, usize)>> = RefCell::new(BTreeMap::new());
    let calls = RefCell::new(0usize);
    let failure: RefCell<Option<DiscoveryError>> = RefCell::new(None);
    let fitness = |i: &usize| -> f64 {
        let call = {
            let mut c = calls.borrow_mut();
            *c += 1;
            *c - 1
        };
        if let Some(&(sim, _)) = memo.borrow().get(i) {
            return sim;
        }
        let sim = net
            .probe_registry(ids[*i])
            .map_err(DiscoveryError::from)
            .and_then(|reg| Ok(taxonomy.wu_palmer_similarity(&query.wanted_domain, &reg.domain)?));
        match sim {
            Ok(sim) => {
                memo.borrow_mut().insert(*i, (sim, call));
                sim
            }
            Err(e) => {
                failure.borrow_mut().get_or_insert(e);
                0.0
            }
        }
    };
    let params = GaParams {
        target_fitness: Some(1.0),
        ..params.clone()
    };
    let report = ga_optimize(fitness, &space, &params, seed)?;
    if let Some(e) = failure.into_inner() {
        return Err(e);
    }

    let pop = params.population_size;
    let generation_of = |call: usize| if call < pop { 0 } else { (call - pop) / (pop - 1) + 1 };
    let memo = memo.into_inner();
    let mut iterations: Vec<IterationRecord> = (0..=report.iterations_run)
        .map(|_| IterationRecord {
            probed: Vec::new(),
            elite: None,
        })
        .collect();
    for (&i, &(sim, call)) in &memo {
        iterations[generation_of(call)].probed.push((ids[i].clone(), sim));
    }
    let ranked = rank(memo.iter().map(|(&i, &(s, _))| (ids[i], s)));
    let (best, similarity) = (ranked[0].0.clone(), ranked[0].1);
    let stop_reason = if similarity >= 1.0 {
        StopReason::SimilarityOne
    } else if memo.len() == ids.len() {
        StopReason::AllProbed
    } else {
        StopReason::BudgetExhausted
    };
    Ok(RegistryMatch {
        registry_id: best,
        similarity,
        trace: DiscoveryTrace {
            total_probes: memo.len() as u64,
            iterations,
            stop_reason,
        },
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::network::{generate_network, GeneratorParams};
    use crate::qos::QosWeights;
    use crate::taxonomy::ConceptId;

    fn query(net: &PeerNetwork, domain: &str) -> DiscoveryQuery {
        DiscoveryQuery {
            wanted_domain: ConceptId::new(domain).unwrap(),
            weights: QosWeights::uniform(net.attributes()).unwrap(),
            requested_level: 0.5,
        }
    }

    #[test]
    fn sweep_probes_everything_once() {
        let t = Taxonomy::bundled();
        let (net, _) = generate_network(&GeneratorParams { registry_count: 25, ..Default::default() }, &t, 1).unwrap();
        let hit = exhaustive_discover(&net, &t, &query(&net, "finance")).unwrap();
        assert_eq!(hit.trace.total_probes, 25);
        assert_eq!(net.probe_count(), 25);
        let one = generate_network(&GeneratorParams { registry_count: 1, ..Default::default() }, &t, 1).unwrap().0;
        let hit = exhaustive_discover(&one, &t, &query(&one, "finance")).unwrap();
        assert_eq!(hit.trace.total_probes, 1);
    }

    #[test]
    fn sweep_tie_goes_to_smallest_id() {
        let t = Taxonomy::bundled();
        let (net, _) = generate_network(&GeneratorParams { registry_count: 25, ..Default::default() }, &t, 1).unwrap();
        // the root is equally (dis)similar to every leaf
        let hit = exhaustive_discover(&net, &t, &query(&net, "service")).unwrap();
        assert_eq!(&hit.registry_id, net.registry_ids().next().unwrap());
    }

    #[test]
    fn ga_finds_exact_domain_and_counts_distinct_probes() {
        let t = Taxonomy::bundled();
        let (net, _) = generate_network(&GeneratorParams { registry_count: 40, ..Default::default() }, &t, 4).unwrap();
        let target = net.registries().nth(9).unwrap().domain.clone();
        let p = GaParams { population_size: 10, max_generations: 200, mutation_rate: 0.3, ..Default::default() };
        let hit = ga_discover(&net, &t, &query(&net, target.as_str()), &p, 2).unwrap();
        assert_eq!(hit.similarity, 1.0);
        assert_eq!(hit.trace.stop_reason, StopReason::SimilarityOne);
        assert_eq!(net.probe_count(), hit.trace.total_probes);
        let ids: Vec<_> = hit.trace.probed_ids().collect();
        assert_eq!(ids.len() as u64, hit.trace.total_probes);
        let again = ga_discover(&net, &t, &query(&net, target.as_str()), &p, 2).unwrap();
        assert_eq!(again, hit);
    }
}
