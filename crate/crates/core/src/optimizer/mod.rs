//! Maximizing population-based optimizers.
//!
//! [`bees_optimize`] is the Bees Algorithm engine (scouts, ranked sites,
//! elite/non-elite recruitment, site abandonment, random re-seeding) and
//! [`ga_optimize`] a generational GA used as a baseline. Both work on any
//! [`SearchSpace`]; two are provided: a continuous [`BoxSpace`] and a discrete
//! [`GraphSpace`] whose neighborhoods are hop balls.

mod bees;
mod benchmark;
mod ga;
mod space;

pub use bees::bees_optimize;
pub use benchmark::{schwefel, sphere, SCHWEFEL_ARGMAX, SCHWEFEL_BOUND};
pub use ga::ga_optimize;
pub use space::{BoxSpace, GeneticSpace, GraphSpace, SearchSpace};
pub(crate) use space::hop_radius;

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum OptimizerError {
    #[error("invalid parameters: {0}")]
    InvalidParams(String),
    #[error("search space is empty")]
    EmptySpace,
    #[error("fitness evaluator returned a non-finite value ({0})")]
    NonFiniteFitness(f64),
    #[error("component {index} = {value} lies outside [-500, 500]")]
    OutOfDomain { index: usize, value: f64 },
}

/// Bees Algorithm control parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct BeesParams {
    /// Scout bees.
    pub n: usize,
    /// Sites selected for neighborhood search.
    pub m: usize,
    /// Elite sites among the `m`.
    pub e: usize,
    /// Recruits per non-elite site.
    pub nsp: usize,
    /// Recruits per elite site.
    pub nep: usize,
    /// Patch size: fraction of each dimension's range (continuous) or hop
    /// radius (discrete).
    pub ngh: f64,
    /// Factor applied to a site's patch size after an iteration without
    /// improvement; 1.0 keeps patches constant.
    pub shrink: f64,
    /// Iterations without improvement before a site is abandoned.
    pub stlim: usize,
    pub max_iterations: usize,
    pub target_fitness: Option<f64>,
}

impl Default for BeesParams {
    fn default() -> Self {
        BeesParams {
            n: 10,
            m: 5,
            e: 1,
            nsp: 2,
            nep: 4,
            ngh: 1.0,
            shrink: 0.8,
            stlim: 10,
            max_iterations: 100,
            target_fitness: None,
        }
    }
}

impl BeesParams {
    pub fn validate(&self) -> Result<(), OptimizerError> {
        let fail = |msg: &str| Err(OptimizerError::InvalidParams(msg.to_string()));
        if self.e < 1 || self.e > self.m || self.m > self.n {
            return fail("need 1 <= e <= m <= n");
        }
        if self.nsp < 1 {
            return fail("nsp must be at least 1");
        }
        if self.nep < self.nsp {
            return fail("nep must be >= nsp");
        }
        if self.ngh.is_nan() || self.ngh <= 0.0 || !self.ngh.is_finite() {
            return fail("ngh must be a positive finite number");
        }
        if !(self.shrink > 0.0 && self.shrink <= 1.0) {
            return fail("shrink must lie in (0, 1]");
        }
        if self.max_iterations < 1 {
            return fail("max_iterations must be at least 1");
        }
        if self.stlim < 1 {
            return fail("stlim must be at least 1");
        }
        Ok(())
    }

    /// Fitness evaluations per iteration when all `m` sites are active.
    pub fn evaluations_per_iteration(&self) -> usize {
        self.e * self.nep + (self.m - self.e) * self.nsp + (self.n - self.m)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GaParams {
    pub population_size: usize,
    pub crossover_rate: f64,
    pub mutation_rate: f64,
    pub tournament_size: usize,
    pub max_generations: usize,
    pub target_fitness: Option<f64>,
}

impl Default for GaParams {
    fn default() -> Self {
        GaParams {
            population_size: 40,
            crossover_rate: 0.9,
            mutation_rate: 0.05,
            tournament_size: 3,
            max_generations: 300,
            target_fitness: None,
        }
    }
}

impl GaParams {
    pub fn validate(&self) -> Result<(), OptimizerError> {
        let fail = |msg: &str| Err(OptimizerError::InvalidParams(msg.to_string()));
        if self.population_size < 2 {
            return fail("population_size must be at least 2");
        }
        if self.tournament_size < 1 {
            return fail("tournament_size must be at least 1");
        }
        if !(0.0..=1.0).contains(&self.crossover_rate) {
            return fail("crossover_rate must lie in [0, 1]");
        }
        if !(0.0..=1.0).contains(&self.mutation_rate) {
            return fail("mutation_rate must lie in [0, 1]");
        }
        Ok(())
    }
}

/// An evaluated point. Higher fitness is better.
#[derive(Debug, Clone, PartialEq)]
pub struct Candidate<P> {
    pub position: P,
    pub fitness: f64,
}

/// A selected site and how long it has gone without improving.
#[derive(Debug, Clone, PartialEq)]
pub struct Site<P> {
    pub best: Candidate<P>,
    pub stagnant_cycles: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct OptimizationReport<P> {
    /// Best candidate ever evaluated (earliest on ties).
    pub best: Candidate<P>,
    pub evaluations: u64,
    pub iterations_run: usize,
    /// Best-so-far fitness after each iteration.
    pub fitness_history: Vec<f64>,
    /// Population at termination: active sites followed by the latest
    /// scouts (bees) or the last generation (GA).
    pub final_population: Vec<Candidate<P>>,
    /// Sites still active at termination (bees only).
    pub final_sites: Vec<Site<P>>,
}

/// Candidate tagged with its evaluation index, used for stable tie-breaking.
#[derive(Debug, Clone)]
pub(crate) struct Scored<P> {
    pub candidate: Candidate<P>,
    pub order: u64,
}

impl<P> Scored<P> {
    /// Ranking order: higher fitness first, then earlier evaluation.
    pub fn rank_cmp(&self, other: &Self) -> std::cmp::Ordering {
        other
            .candidate
            .fitness
            .total_cmp(&self.candidate.fitness)
            .then(self.order.cmp(&other.order))
    }
}

/// Counts fitness calls and rejects non-finite values.
pub(crate) struct Evaluator<'a, F> {
    fitness: &'a F,
    pub count: u64,
}

impl<'a, F> Evaluator<'a, F> {
    pub fn new(fitness: &'a F) -> Self {
        Evaluator { fitness, count: 0 }
    }

    pub fn eval<P>(&mut self, position: P) -> Result<Scored<P>, OptimizerError>
    where
        F: Fn(&P) -> f64,
    {
        let fitness = (self.fitness)(&position);
        if !fitness.is_finite() {
            return Err(OptimizerError::NonFiniteFitness(fitness));
        }
        let order = self.count;
        self.count += 1;
        Ok(Scored {
            candidate: Candidate { position, fitness },
            order,
        })
    }
}

/// Replaces `best` when `challenger` is strictly fitter.
pub(crate) fn keep_best<P: Clone>(best: &mut Option<Scored<P>>, challenger: &Scored<P>) {
    match best {
        Some(b) if b.candidate.fitness >= challenger.candidate.fitness => {}
        _ => *best = Some(challenger.clone()),
    }
}
