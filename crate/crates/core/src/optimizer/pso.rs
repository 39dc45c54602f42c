//! Box-constrained particle swarm minimization.
//!
//! Updates are synchronous: every particle of an iteration sees the same global best,
//! and the random draws of particle `i` at iteration `k` come from their own ChaCha
//! stream. Results are therefore independent of how the evaluations are scheduled.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::OptimizerError;

/// Per-dimension search interval.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Bounds<const D: usize> {
    pub lower: [f64; D],
    pub upper: [f64; D],
}

impl<const D: usize> Bounds<D> {
    pub fn new(lower: [f64; D], upper: [f64; D]) -> Result<Self, OptimizerError> {
        let b = Self { lower, upper };
        b.validate()?;
        Ok(b)
    }

    pub fn uniform(lower: f64, upper: f64) -> Result<Self, OptimizerError> {
        Self::new([lower; D], [upper; D])
    }

    pub fn validate(&self) -> Result<(), OptimizerError> {
        for k in 0..D {
            let (lo, hi) = (self.lower[k], self.upper[k]);
            if !(lo.is_finite() && hi.is_finite() && lo < hi) {
                return Err(OptimizerError::InvalidBounds { index: k, lower: lo, upper: hi });
            }
        }
        Ok(())
    }

    pub fn range(&self, k: usize) -> f64 {
        self.upper[k] - self.lower[k]
    }

    pub fn contains(&self, x: &[f64; D]) -> bool {
        (0..D).all(|k| x[k] >= self.lower[k] && x[k] <= self.upper[k])
    }

    /// Mirrors `x` back into `[lower, upper]`, flipping the velocity component of every
    /// reflected coordinate.
    fn reflect(&self, x: &mut [f64; D], v: &mut [f64; D]) {
        for k in 0..D {
            let (lo, hi) = (self.lower[k], self.upper[k]);
            if x[k] > hi {
                x[k] = hi - (x[k] - hi);
                v[k] = -v[k];
            } else if x[k] < lo {
                x[k] = lo + (lo - x[k]);
                v[k] = -v[k];
            }
            // Overshoot by more than a full range.
            x[k] = x[k].clamp(lo, hi);
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PsoConfig {
    pub population: usize,
    pub max_iterations: usize,
    pub inertia: f64,
    pub cognitive: f64,
    pub social: f64,
    /// Maximum speed per dimension as a fraction of that dimension's range.
    pub velocity_clamp: f64,
    pub seed: u64,
}

impl Default for PsoConfig {
    fn default() -> Self {
        Self {
            population: 40,
            max_iterations: 300,
            inertia: 0.729,
            cognitive: 1.494,
            social: 1.494,
            velocity_clamp: 0.5,
            seed: 0,
        }
    }
}

impl PsoConfig {
    pub fn validate(&self) -> Result<(), OptimizerError> {
        let bad = |name, reason| Err(OptimizerError::InvalidConfig { name, reason });
        if self.population < 2 {
            return bad("population", "must be at least 2");
        }
        for (name, v) in [("inertia", self.inertia), ("cognitive", self.cognitive), ("social", self.social)] {
            if !(v >= 0.0 && v.is_finite()) {
                return bad(name, "must be a finite non-negative number");
            }
        }
        if !(self.velocity_clamp > 0.0 && self.velocity_clamp.is_finite()) {
            return bad("velocity_clamp", "must be positive");
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct OptimizationResult<const D: usize> {
    pub best_params: [f64; D],
    pub best_cost: f64,
    /// Global-best cost after initialization and after each iteration.
    pub cost_history: Vec<f64>,
    pub param_history: Vec<[f64; D]>,
    pub evaluations: usize,
}

struct Particle<const D: usize> {
    x: [f64; D],
    v: [f64; D],
    best_x: [f64; D],
    best_cost: f64,
}

fn stream_rng(seed: u64, particle: usize, iteration: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(((iteration as u64) << 32) | particle as u64);
    rng
}

fn evaluate_all<const D: usize, F>(cost: &F, particles: &[Particle<D>]) -> Vec<f64>
where
    F: Fn(&[f64; D]) -> f64 + Sync,
{
    particles
        .par_iter()
        .map(|p| {
            let c = cost(&p.x);
            if c.is_finite() { c } else { f64::INFINITY }
        })
        .collect()
}

/// Lowest cost, earliest index on ties.
fn leader<const D: usize>(particles: &[Particle<D>]) -> ([f64; D], f64) {
    particles.iter().fold((particles[0].best_x, particles[0].best_cost), |acc, p| {
        if p.best_cost < acc.1 { (p.best_x, p.best_cost) } else { acc }
    })
}

/// Minimizes `cost` over the box. Non-finite costs are treated as `+∞`.
pub fn pso_minimize<const D: usize, F>(
    cost: F,
    bounds: &Bounds<D>,
    config: &PsoConfig,
) -> Result<OptimizationResult<D>, OptimizerError>
where
    F: Fn(&[f64; D]) -> f64 + Sync,
{
    bounds.validate()?;
    config.validate()?;
    let vmax: [f64; D] = std::array::from_fn(|k| config.velocity_clamp * bounds.range(k));

    let mut particles: Vec<Particle<D>> = (0..config.population)
        .map(|i| {
            let mut rng = stream_rng(config.seed, i, 0);
            let x = std::array::from_fn(|k| rng.gen_range(bounds.lower[k]..=bounds.upper[k]));
            let v = std::array::from_fn(|k| rng.gen_range(-vmax[k]..=vmax[k]));
            Particle { x, v, best_x: x, best_cost: f64::INFINITY }
        })
        .collect();
    let costs = evaluate_all(&cost, &particles);
    let mut evaluations = particles.len();
    if costs.iter().all(|c| c.is_infinite()) {
        return Err(OptimizerError::Initialization);
    }
    for (p, c) in particles.iter_mut().zip(costs) {
        p.best_cost = c;
    }
    let (mut gbest, mut gcost) = leader(&particles);
    let mut cost_history = vec![gcost];
    let mut param_history = vec![gbest];

    for it in 1..=config.max_iterations {
        for (i, p) in particles.iter_mut().enumerate() {
            let mut rng = stream_rng(config.seed, i, it);
            for k in 0..D {
                let (r1, r2): (f64, f64) = (rng.gen(), rng.gen());
                let v = config.inertia * p.v[k]
                    + config.cognitive * r1 * (p.best_x[k] - p.x[k])
                    + config.social * r2 * (gbest[k] - p.x[k]);
                p.v[k] = v.clamp(-vmax[k], vmax[k]);
                p.x[k] += p.v[k];
            }
            bounds.reflect(&mut p.x, &mut p.v);
        }
        let costs = evaluate_all(&cost, &particles);
        evaluations += particles.len();
        for (p, c) in particles.iter_mut().zip(costs) {
            if c < p.best_cost {
                p.best_cost = c;
                p.best_x = p.x;
            }
        }
        let (x, c) = leader(&particles);
        if c < gcost {
            gbest = x;
            gcost = c;
        }
        cost_history.push(gcost);
        param_history.push(gbest);
    }

    Ok(OptimizationResult { best_params: gbest, best_cost: gcost, cost_history, param_history, evaluations })
}
