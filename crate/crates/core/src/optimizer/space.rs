use std::collections::{BTreeSet, VecDeque};

use rand::Rng;

use super::OptimizerError;

/// A space the optimizers can sample from.
pub trait SearchSpace {
    type Point: Clone + std::fmt::Debug + PartialEq;

    /// Fails with [`OptimizerError::EmptySpace`] when nothing can be sampled.
    fn check(&self) -> Result<(), OptimizerError>;

    fn random_point<R: Rng + ?Sized>(&self, rng: &mut R) -> Self::Point;

    /// Uniform draw from the patch of size `ngh` around `center`.
    fn neighborhood_sample<R: Rng + ?Sized>(
        &self,
        center: &Self::Point,
        ngh: f64,
        rng: &mut R,
    ) -> Self::Point;
}

/// Variation operators for the GA baseline.
pub trait GeneticSpace: SearchSpace {
    fn crossover<R: Rng + ?Sized>(
        &self,
        a: &Self::Point,
        b: &Self::Point,
        rng: &mut R,
    ) -> Self::Point;

    fn mutate<R: Rng + ?Sized>(&self, x: &mut Self::Point, rate: f64, rng: &mut R);
}

/// Axis-aligned box `[lower_i, upper_i]`.
#[derive(Debug, Clone, PartialEq)]
pub struct BoxSpace {
    lower: Vec<f64>,
    upper: Vec<f64>,
}

impl BoxSpace {
    pub fn new(lower: Vec<f64>, upper: Vec<f64>) -> Result<Self, OptimizerError> {
        if lower.len() != upper.len() {
            return Err(OptimizerError::InvalidParams(
                "lower and upper bounds differ in dimension".into(),
            ));
        }
        let space = BoxSpace { lower, upper };
        space.check()?;
        Ok(space)
    }

    /// `[lo, hi]^dim`.
    pub fn cube(dim: usize, lo: f64, hi: f64) -> Result<Self, OptimizerError> {
        Self::new(vec![lo; dim], vec![hi; dim])
    }

    pub fn dim(&self) -> usize {
        self.lower.len()
    }

    pub fn lower(&self) -> &[f64] {
        &self.lower
    }

    pub fn upper(&self) -> &[f64] {
        &self.upper
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        x.len() == self.dim()
            && x.iter()
                .zip(self.lower.iter().zip(&self.upper))
                .all(|(v, (lo, hi))| lo <= v && v <= hi)
    }
}

fn uniform<R: Rng + ?Sized>(rng: &mut R, lo: f64, hi: f64) -> f64 {
    if lo < hi {
        rng.random_range(lo..=hi)
    } else {
        lo
    }
}

impl SearchSpace for BoxSpace {
    type Point = Vec<f64>;

    fn check(&self) -> Result<(), OptimizerError> {
        let ok = self.dim() > 0
            && self
                .lower
                .iter()
                .zip(&self.upper)
                .all(|(lo, hi)| lo.is_finite() && hi.is_finite() && lo <= hi);
        if ok {
            Ok(())
        } else {
            Err(OptimizerError::EmptySpace)
        }
    }

    fn random_point<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec<f64> {
        self.lower
            .iter()
            .zip(&self.upper)
            .map(|(&lo, &hi)| uniform(rng, lo, hi))
            .collect()
    }

    fn neighborhood_sample<R: Rng + ?Sized>(&self, center: &Vec<f64>, ngh: f64, rng: &mut R) -> Vec<f64> {
        center
            .iter()
            .zip(self.lower.iter().zip(&self.upper))
            .map(|(&c, (&lo, &hi))| {
                let half = ngh * (hi - lo);
                uniform(rng, c - half, c + half).clamp(lo, hi)
            })
            .collect()
    }
}

impl GeneticSpace for BoxSpace {
    /// Arithmetic blend `w·a + (1−w)·b` with one uniform weight per child.
    fn crossover<R: Rng + ?Sized>(&self, a: &Vec<f64>, b: &Vec<f64>, rng: &mut R) -> Vec<f64> {
        let w: f64 = rng.random();
        a.iter()
            .zip(b)
            .zip(self.lower.iter().zip(&self.upper))
            .map(|((x, y), (&lo, &hi))| (w * x + (1.0 - w) * y).clamp(lo, hi))
            .collect()
    }

    /// Redraws each gene uniformly with probability `rate`.
    fn mutate<R: Rng + ?Sized>(&self, x: &mut Vec<f64>, rate: f64, rng: &mut R) {
        for (gene, (&lo, &hi)) in x.iter_mut().zip(self.lower.iter().zip(&self.upper)) {
            if rng.random::<f64>() < rate {
                *gene = uniform(rng, lo, hi);
            }
        }
    }
}

/// Discrete elements `0..len` joined by an undirected adjacency graph.
#[derive(Debug, Clone, PartialEq)]
pub struct GraphSpace {
    adjacency: Vec<BTreeSet<usize>>,
}

impl GraphSpace {
    /// Builds the graph from undirected edges; self-loops are dropped.
    pub fn new(len: usize, edges: &[(usize, usize)]) -> Result<Self, OptimizerError> {
        let mut adjacency = vec![BTreeSet::new(); len];
        for &(a, b) in edges {
            if a >= len || b >= len {
                return Err(OptimizerError::InvalidParams(format!(
                    "edge ({a}, {b}) references an element outside 0..{len}"
                )));
            }
            if a != b {
                adjacency[a].insert(b);
                adjacency[b].insert(a);
            }
        }
        Ok(GraphSpace { adjacency })
    }

    pub fn len(&self) -> usize {
        self.adjacency.len()
    }

    pub fn is_empty(&self) -> bool {
        self.adjacency.is_empty()
    }

    pub fn neighbors(&self, x: usize) -> &BTreeSet<usize> {
        &self.adjacency[x]
    }

    /// Elements within `hops` edges of `center` (center included), sorted.
    pub fn ball(&self, center: usize, hops: usize) -> Vec<usize> {
        let mut seen = BTreeSet::from([center]);
        let mut queue = VecDeque::from([(center, 0usize)]);
        while let Some((x, d)) = queue.pop_front() {
            if d == hops {
                continue;
            }
            for &y in &self.adjacency[x] {
                if seen.insert(y) {
                    queue.push_back((y, d + 1));
                }
            }
        }
        seen.into_iter().collect()
    }
}

/// Hop radius encoded by a patch size, rounded up so any positive patch
/// reaches direct neighbors.
pub(crate) fn hop_radius(ngh: f64) -> usize {
    ngh.ceil().max(1.0) as usize
}

impl SearchSpace for GraphSpace {
    type Point = usize;

    fn check(&self) -> Result<(), OptimizerError> {
        if self.adjacency.is_empty() {
            Err(OptimizerError::EmptySpace)
        } else {
            Ok(())
        }
    }

    fn random_point<R: Rng + ?Sized>(&self, rng: &mut R) -> usize {
        rng.random_range(0..self.adjacency.len())
    }

    fn neighborhood_sample<R: Rng + ?Sized>(&self, center: &usize, ngh: f64, rng: &mut R) -> usize {
        let ball = self.ball(*center, hop_radius(ngh));
        ball[rng.random_range(0..ball.len())]
    }
}

impl GeneticSpace for GraphSpace {
    /// Inherits one parent's element.
    fn crossover<R: Rng + ?Sized>(&self, a: &usize, b: &usize, rng: &mut R) -> usize {
        if rng.random::<bool>() {
            *a
        } else {
            *b
        }
    }

    fn mutate<R: Rng + ?Sized>(&self, x: &mut usize, rate: f64, rng: &mut R) {
        if rng.random::<f64>() < rate {
            *x = self.random_point(rng);
        }
    }
}
