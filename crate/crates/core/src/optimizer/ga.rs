use rand::Rng;

use super::{keep_best, Evaluator, GaParams, GeneticSpace, OptimizationReport, OptimizerError, Scored};
use crate::seeded_rng;

fn tournament<'a, P, R: Rng + ?Sized>(
    population: &'a [Scored<P>],
    size: usize,
    rng: &mut R,
) -> &'a Scored<P> {
    let mut winner = &population[rng.random_range(0..population.len())];
    for _ in 1..size {
        let challenger = &population[rng.random_range(0..population.len())];
        if challenger.rank_cmp(winner).is_lt() {
            winner = challenger;
        }
    }
    winner
}

/// Generational GA with tournament selection and single-individual elitism.
///
/// Every generation copies the fittest individual unchanged, then fills the
/// rest of the population with offspring: two tournament winners are blended
/// with probability `crossover_rate` (otherwise the first is copied), and the
/// child is mutated gene-wise with probability `mutation_rate`.
pub fn ga_optimize<S, F>(
    fitness: F,
    space: &S,
    params: &GaParams,
    seed: u64,
) -> Result<OptimizationReport<S::Point>, OptimizerError>
where
    S: GeneticSpace,
    F: Fn(&S::Point) -> f64,
{
    params.validate()?;
    space.check()?;
    let mut rng = seeded_rng(seed);
    let mut evaluator = Evaluator::new(&fitness);
    let mut best: Option<Scored<S::Point>> = None;

    let mut population = Vec::with_capacity(params.population_size);
    for _ in 0..params.population_size {
        let s = evaluator.eval(space.random_point(&mut rng))?;
        keep_best(&mut best, &s);
        population.push(s);
    }
    let reached = |b: &Option<Scored<S::Point>>| match (params.target_fitness, b) {
        (Some(t), Some(b)) => b.candidate.fitness >= t,
        _ => false,
    };

    let mut history = Vec::new();
    while history.len() < params.max_generations && !reached(&best) {
        let elite = population
            .iter()
            .min_by(|a, b| a.rank_cmp(b))
            .expect("population_size >= 2")
            .clone();
        let mut next = Vec::with_capacity(params.population_size);
        next.push(elite);
        while next.len() < params.population_size {
            let a = tournament(&population, params.tournament_size, &mut rng);
            let b = tournament(&population, params.tournament_size, &mut rng);
            let mut child = if rng.random::<f64>() < params.crossover_rate {
                space.crossover(&a.candidate.position, &b.candidate.position, &mut rng)
            } else {
                a.candidate.position.clone()
            };
            space.mutate(&mut child, params.mutation_rate, &mut rng);
            let s = evaluator.eval(child)?;
            keep_best(&mut best, &s);
            next.push(s);
        }
        population = next;
        history.push(best.as_ref().expect("population_size >= 2").candidate.fitness);
    }

    Ok(OptimizationReport {
        best: best.expect("population_size >= 2").candidate,
        evaluations: evaluator.count,
        iterations_run: history.len(),
        fitness_history: history,
        final_population: population.into_iter().map(|s| s.candidate).collect(),
        final_sites: Vec::new(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::optimizer::{sphere, BoxSpace, GraphSpace};

    #[test]
    fn constant_fitness_after_first_generation() {
        let space = BoxSpace::cube(2, -1.0, 1.0).unwrap();
        let p = GaParams { max_generations: 5, ..Default::default() };
        let r = ga_optimize(|_: &Vec<f64>| 7.0, &space, &p, 4).unwrap();
        assert_eq!(r.fitness_history[0], 7.0);
        assert_eq!(r.best.fitness, 7.0);
    }

    #[test]
    fn sphere_converges() {
        let space = BoxSpace::cube(2, -5.0, 5.0).unwrap();
        let r = ga_optimize(|x: &Vec<f64>| sphere(x), &space, &GaParams::default(), 12).unwrap();
        assert!(r.best.fitness >= -1e-3, "{:?}", r.best);
    }

    #[test]
    fn elitism_without_variation() {
        let space = BoxSpace::cube(2, -5.0, 5.0).unwrap();
        let p = GaParams {
            crossover_rate: 0.0,
            mutation_rate: 0.0,
            max_generations: 30,
            ..Default::default()
        };
        let f = |x: &Vec<f64>| sphere(x);
        let initial = ga_optimize(f, &space, &GaParams { max_generations: 0, ..p.clone() }, 6).unwrap();
        let r = ga_optimize(f, &space, &p, 6).unwrap();
        assert!(r.fitness_history.windows(2).all(|w| w[0] <= w[1]));
        assert!(r.final_population.contains(&initial.best));
        assert_eq!(r.best, initial.best);
    }

    #[test]
    fn population_size_is_constant() {
        let space = BoxSpace::cube(3, 0.0, 1.0).unwrap();
        for gens in [0, 1, 9] {
            let p = GaParams { population_size: 13, max_generations: gens, ..Default::default() };
            let r = ga_optimize(|x: &Vec<f64>| x[0], &space, &p, 1).unwrap();
            assert_eq!(r.final_population.len(), 13);
            assert_eq!(r.evaluations, 13 + gens as u64 * 12);
        }
    }

    #[test]
    fn deterministic_and_discrete() {
        let g = GraphSpace::new(50, &[]).unwrap();
        let p = GaParams { population_size: 10, max_generations: 40, mutation_rate: 0.3, ..Default::default() };
        let f = |x: &usize| -((*x as f64) - 31.0).abs();
        let a = ga_optimize(f, &g, &p, 77).unwrap();
        assert_eq!(a, ga_optimize(f, &g, &p, 77).unwrap());
        assert_eq!(a.best.position, 31);
    }

    #[test]
    fn invalid_params() {
        let space = BoxSpace::cube(1, 0.0, 1.0).unwrap();
        let p = GaParams { population_size: 1, ..Default::default() };
        assert!(matches!(
            ga_optimize(|x: &Vec<f64>| x[0], &space, &p, 0),
            Err(OptimizerError::InvalidParams(_))
        ));
    }
}
