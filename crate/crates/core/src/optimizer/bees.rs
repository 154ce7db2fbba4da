use super::{
    keep_best, BeesParams, Candidate, Evaluator, OptimizationReport, OptimizerError, Scored,
    SearchSpace, Site,
};
use crate::seeded_rng;

struct ActiveSite<P> {
    center: Scored<P>,
    stagnant_cycles: usize,
    ngh: f64,
}

/// Runs the Bees Algorithm, maximizing `fitness` over `space`.
///
/// Each iteration ranks the surviving sites together with the latest scouts,
/// keeps the `m` best as sites, sends `nep` recruits to each of the first `e`
/// and `nsp` to the rest, moves a site to its best recruit only when that
/// recruit is strictly better (otherwise the site's patch shrinks by
/// `shrink`), abandons sites that stalled for `stlim` iterations, and finally
/// evaluates `n − m` fresh random scouts.
pub fn bees_optimize<S, F>(
    fitness: F,
    space: &S,
    params: &BeesParams,
    seed: u64,
) -> Result<OptimizationReport<S::Point>, OptimizerError>
where
    S: SearchSpace,
    F: Fn(&S::Point) -> f64,
{
    params.validate()?;
    space.check()?;
    let mut rng = seeded_rng(seed);
    let mut evaluator = Evaluator::new(&fitness);
    let mut best: Option<Scored<S::Point>> = None;

    let mut scouts = Vec::with_capacity(params.n);
    for _ in 0..params.n {
        let s = evaluator.eval(space.random_point(&mut rng))?;
        keep_best(&mut best, &s);
        scouts.push(s);
    }
    let mut sites: Vec<ActiveSite<S::Point>> = Vec::new();
    let mut history = Vec::new();
    let reached = |b: &Option<Scored<S::Point>>| match (params.target_fitness, b) {
        (Some(t), Some(b)) => b.candidate.fitness >= t,
        _ => false,
    };

    while history.len() < params.max_iterations && !reached(&best) {
        let mut pool: Vec<ActiveSite<S::Point>> = sites
            .drain(..)
            .chain(scouts.drain(..).map(|center| ActiveSite {
                center,
                stagnant_cycles: 0,
                ngh: params.ngh,
            }))
            .collect();
        pool.sort_by(|a, b| a.center.rank_cmp(&b.center));
        pool.truncate(params.m);

        for (rank, site) in pool.iter_mut().enumerate() {
            let recruits = if rank < params.e { params.nep } else { params.nsp };
            let mut patch_best: Option<Scored<S::Point>> = None;
            for _ in 0..recruits {
                let pos = space.neighborhood_sample(&site.center.candidate.position, site.ngh, &mut rng);
                let s = evaluator.eval(pos)?;
                keep_best(&mut best, &s);
                keep_best(&mut patch_best, &s);
            }
            match patch_best {
                Some(p) if p.candidate.fitness > site.center.candidate.fitness => {
                    site.center = p;
                    site.stagnant_cycles = 0;
                }
                _ => {
                    site.stagnant_cycles += 1;
                    site.ngh *= params.shrink;
                }
            }
        }
        pool.retain(|s| s.stagnant_cycles < params.stlim);
        sites = pool;

        for _ in 0..params.n - params.m {
            let s = evaluator.eval(space.random_point(&mut rng))?;
            keep_best(&mut best, &s);
            scouts.push(s);
        }
        history.push(best.as_ref().expect("n >= 1").candidate.fitness);
    }

    let final_population: Vec<Candidate<S::Point>> = sites
        .iter()
        .map(|s| &s.center)
        .chain(scouts.iter())
        .map(|s| s.candidate.clone())
        .collect();
    let final_sites = sites
        .iter()
        .map(|s| Site {
            best: s.center.candidate.clone(),
            stagnant_cycles: s.stagnant_cycles,
        })
        .collect();
    Ok(OptimizationReport {
        best: best.expect("n >= 1").candidate,
        evaluations: evaluator.count,
        iterations_run: history.len(),
        fitness_history: history,
        final_population,
        final_sites,
    })
}
