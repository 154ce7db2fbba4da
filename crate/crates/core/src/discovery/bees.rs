use std::collections::{BTreeMap, BTreeSet, VecDeque};

use rand::seq::index::sample;

use super::{rank, DiscoveryError, DiscoveryQuery, DiscoveryTrace, IterationRecord, RegistryMatch, StopReason};
use crate::network::{PeerNetwork, RegistryId};
use crate::optimizer::{hop_radius, BeesParams};
use crate::seeded_rng;
use crate::taxonomy::Taxonomy;
use crate::SimRng;

/// Registries within `hops` peer links of `center`, excluding `center`.
fn patch<'a>(net: &'a PeerNetwork, center: &'a RegistryId, hops: usize) -> Result<BTreeSet<&'a RegistryId>, DiscoveryError> {
    let mut seen = BTreeSet::from([center]);
    let mut queue = VecDeque::from([(center, 0usize)]);
    while let Some((x, d)) = queue.pop_front() {
        if d == hops {
            continue;
        }
        for y in net.neighbors_of(x)? {
            if seen.insert(y) {
                queue.push_back((y, d + 1));
            }
        }
    }
    seen.remove(center);
    Ok(seen)
}

/// Uniform choice of up to `k` items from `pool` (already in id order); the
/// result keeps id order.
fn choose<'a>(pool: &[&'a RegistryId], k: usize, rng: &mut SimRng) -> Vec<&'a RegistryId> {
    let k = k.min(pool.len());
    let mut picked: Vec<usize> = sample(rng, pool.len(), k).into_vec();
    picked.sort_unstable();
    picked.into_iter().map(|i| pool[i]).collect()
}

struct SiteState {
    stagnant: usize,
    abandoned: bool,
}

/// Bees-guided search for the registry whose domain best matches
/// `query.wanted_domain`.
///
/// 1. Probe `min(n, registry count)` random registries and score each by
///    Wu–Palmer similarity.
/// 2. Rank probed registries (similarity descending, id ascending). The best
///    one is the elite site and gets up to `nep` probes among unprobed
///    registries within `ngh` hops; each of the next `m − e` sites gets up to
///    `nsp`. Sites whose patch holds nothing new are skipped, and a site
///    whose patch yields nothing better for `stlim` iterations is abandoned.
/// 3. `n − m` scouts probe random unprobed registries.
/// 4. Repeat from 2 until similarity 1.0 is found, every registry has been
///    probed, or `max_iterations` search iterations have run.
///
/// No registry is probed twice. Probes of one iteration are issued together
/// and consumed in id order.
pub fn discover_registry(
    net: &PeerNetwork,
    taxonomy: &Taxonomy,
    query: &DiscoveryQuery,
    params: &BeesParams,
    seed: u64,
) -> Result<RegistryMatch, DiscoveryError> {
    params.validate()?;
    query.check(net, taxonomy)?;
    if net.is_empty() {
        return Err(DiscoveryError::EmptyNetwork);
    }
    let mut rng = seeded_rng(seed);
    let all: Vec<&RegistryId> = net.registry_ids().collect();
    let hops = hop_radius(params.ngh);
    let mut similarity: BTreeMap<&RegistryId, f64> = BTreeMap::new();
    let mut sites: BTreeMap<&RegistryId, SiteState> = BTreeMap::new();
    let mut iterations = Vec::new();

    let probe_batch = |batch: &BTreeSet<&RegistryId>| -> Result<Vec<(RegistryId, f64)>, DiscoveryError> {
        batch
            .iter()
            .map(|rid| {
                let reg = net.probe_registry(rid)?;
                let sim = taxonomy.wu_palmer_similarity(&query.wanted_domain, &reg.domain)?;
                Ok(((*rid).clone(), sim))
            })
            .collect()
    };

    let initial: BTreeSet<&RegistryId> = choose(&all, params.n, &mut rng).into_iter().collect();
    let probed = probe_batch(&initial)?;
    for (rid, (_, sim)) in initial.iter().zip(&probed) {
        similarity.insert(rid, *sim);
    }
    let first_best = rank(similarity.iter().map(|(k, v)| (*k, *v)))[0].0.clone();
    iterations.push(IterationRecord {
        probed,
        elite: Some(first_best),
    });

    let site_count = 1 + params.m - params.e;
    let stop_reason = loop {
        let ranked = rank(similarity.iter().map(|(k, v)| (*k, *v)));
        if ranked[0].1 >= 1.0 {
            break StopReason::SimilarityOne;
        }
        if similarity.len() == all.len() {
            break StopReason::AllProbed;
        }
        if iterations.len() > params.max_iterations {
            break StopReason::BudgetExhausted;
        }

        let mut claimed: BTreeSet<&RegistryId> = BTreeSet::new();
        let mut explored: Vec<(&RegistryId, f64, Vec<&RegistryId>)> = Vec::new();
        for &(rid, sim) in &ranked {
            if explored.len() == site_count {
                break;
            }
            if sites.get(rid).is_some_and(|s| s.abandoned) {
                continue;
            }
            let fresh: Vec<&RegistryId> = patch(net, rid, hops)?
                .into_iter()
                .filter(|r| !similarity.contains_key(r) && !claimed.contains(r))
                .collect();
            if fresh.is_empty() {
                continue;
            }
            let quota = if explored.is_empty() { params.nep } else { params.nsp };
            let recruits = choose(&fresh, quota, &mut rng);
            claimed.extend(recruits.iter().copied());
            explored.push((rid, sim, recruits));
        }
        let open: Vec<&RegistryId> = all
            .iter()
            .copied()
            .filter(|r| !similarity.contains_key(r) && !claimed.contains(r))
            .collect();
        claimed.extend(choose(&open, params.n - params.m, &mut rng));
        if claimed.is_empty() {
            // every remaining registry is out of reach and there are no scouts
            break StopReason::BudgetExhausted;
        }

        let probed = probe_batch(&claimed)?;
        let found: BTreeMap<&RegistryId, f64> = claimed.iter().copied().zip(probed.iter().map(|p| p.1)).collect();
        for (rid, sim) in &found {
            similarity.insert(rid, *sim);
        }
        for (rid, sim, recruits) in &explored {
            let improved = recruits.iter().any(|r| found[r] > *sim);
            let state = sites.entry(rid).or_insert(SiteState { stagnant: 0, abandoned: false });
            if improved {
                state.stagnant = 0;
            } else {
                state.stagnant += 1;
                state.abandoned = state.stagnant >= params.stlim;
            }
        }
        iterations.push(IterationRecord {
            probed,
            elite: explored.first().map(|(rid, _, _)| (*rid).clone()),
        });
    };

    let (best, sim) = rank(similarity.iter().map(|(k, v)| (*k, *v)))[0];
    Ok(RegistryMatch {
        registry_id: best.clone(),
        similarity: sim,
        trace: DiscoveryTrace {
            total_probes: similarity.len() as u64,
            iterations,
            stop_reason,
        },
    })
}
