//! Particle swarm optimizers behind a common [`Optimizer`] trait.
//!
//! Two strategies are built in and registered by name in
//! [`OptimizerRegistry::builtin`]:
//!
//! * `pe-pso`: persistent exploration (the worst `floor(alpha * N)` particles
//!   are reinitialized every iteration) with entropy-adapted `w`, `c1`, `c2`;
//! * `vanilla-pso`: the same velocity rule with fixed `w = 0.7`,
//!   `c1 = c2 = 1.5`, no reinitialization and no adaptation.
//!
//! Both minimize. Every evaluation that the fitness function marks legal is
//! offered to a bounded [`TrajectoryPool`].

mod entropy;
mod pe_pso;
mod pool;
mod swarm;
mod vanilla;

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use entropy::{adapt_params, compute_entropy, select_worst, EntropyError};
pub use pe_pso::PePso;
pub use pool::{PoolEntry, TrajectoryPool};
pub use vanilla::VanillaPso;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ConfigError {
    #[error("invalid swarm configuration: {0}")]
    Invalid(String),
    #[error("unknown optimizer `{name}` (known: {known})")]
    UnknownOptimizer { name: String, known: String },
}

/// Result of evaluating one decision vector.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Evaluation {
    pub fitness: f64,
    /// Whether the candidate may enter the trajectory pool.
    pub legal: bool,
}

/// Objective minimized by the swarm. Implementations must be pure: the swarm
/// evaluates particles concurrently.
pub trait Fitness: Sync {
    fn dimension(&self) -> usize;
    fn evaluate(&self, x: &[f64]) -> Evaluation;
}

/// Adapts a plain function into a [`Fitness`] whose every value is legal.
pub struct FnFitness<F> {
    dimension: usize,
    f: F,
}

impl<F: Fn(&[f64]) -> f64 + Sync> FnFitness<F> {
    pub fn new(dimension: usize, f: F) -> Self {
        Self { dimension, f }
    }
}

impl<F: Fn(&[f64]) -> f64 + Sync> Fitness for FnFitness<F> {
    fn dimension(&self) -> usize {
        self.dimension
    }

    fn evaluate(&self, x: &[f64]) -> Evaluation {
        Evaluation { fitness: (self.f)(x), legal: true }
    }
}

/// Per-dimension box `[lower, upper]` of the decision space.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SearchBounds {
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
}

impl SearchBounds {
    pub fn new(lower: Vec<f64>, upper: Vec<f64>) -> Result<Self, ConfigError> {
        if lower.len() != upper.len() || lower.is_empty() {
            return Err(ConfigError::Invalid("bounds must be non-empty and of equal length".into()));
        }
        if lower.iter().zip(&upper).any(|(l, u)| !(l < u) || !l.is_finite() || !u.is_finite()) {
            return Err(ConfigError::Invalid("every lower bound must be finite and below its upper bound".into()));
        }
        Ok(Self { lower, upper })
    }

    pub fn uniform(dimension: usize, lower: f64, upper: f64) -> Result<Self, ConfigError> {
        Self::new(vec![lower; dimension], vec![upper; dimension])
    }

    pub fn dimension(&self) -> usize {
        self.lower.len()
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        x.len() == self.dimension() && x.iter().zip(self.lower.iter().zip(&self.upper)).all(|(v, (l, u))| l <= v && v <= u)
    }
}

/// Closed interval used for an adaptive coefficient.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ParamRange {
    pub min: f64,
    pub max: f64,
}

impl ParamRange {
    pub const fn new(min: f64, max: f64) -> Self {
        Self { min, max }
    }

    pub fn contains(&self, v: f64) -> bool {
        self.min <= v && v <= self.max
    }
}

/// Velocity-update coefficients.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Params {
    pub w: f64,
    pub c1: f64,
    pub c2: f64,
}

fn default_particles() -> usize {
    100
}
fn default_reset_rate() -> f64 {
    0.5
}
fn default_w() -> ParamRange {
    ParamRange::new(0.4, 0.9)
}
fn default_c() -> ParamRange {
    ParamRange::new(1.0, 2.0)
}
fn default_bins() -> usize {
    10
}
fn default_v_max_fraction() -> f64 {
    0.2
}
fn default_pool_capacity() -> usize {
    50
}
fn default_parallel() -> bool {
    true
}

/// Swarm hyper-parameters. The search box is supplied separately when an
/// optimizer is created, since it belongs to the problem.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SwarmConfig {
    #[serde(default = "default_particles")]
    pub n_particles: usize,
    /// Fraction `alpha` of the swarm reinitialized per iteration.
    #[serde(default = "default_reset_rate")]
    pub reset_rate: f64,
    #[serde(default = "default_w")]
    pub w_range: ParamRange,
    #[serde(default = "default_c")]
    pub c1_range: ParamRange,
    #[serde(default = "default_c")]
    pub c2_range: ParamRange,
    /// Histogram bins `m` for the fitness entropy.
    #[serde(default = "default_bins")]
    pub entropy_bins: usize,
    /// `V_max` per dimension as a fraction of that dimension's width.
    #[serde(default = "default_v_max_fraction")]
    pub v_max_fraction: f64,
    #[serde(default = "default_pool_capacity")]
    pub pool_capacity: usize,
    #[serde(default)]
    pub seed: u64,
    /// Evaluate particles on the rayon pool.
    #[serde(default = "default_parallel")]
    pub parallel: bool,
}

impl Default for SwarmConfig {
    fn default() -> Self {
        Self {
            n_particles: default_particles(),
            reset_rate: default_reset_rate(),
            w_range: default_w(),
            c1_range: default_c(),
            c2_range: default_c(),
            entropy_bins: default_bins(),
            v_max_fraction: default_v_max_fraction(),
            pool_capacity: default_pool_capacity(),
            seed: 0,
            parallel: default_parallel(),
        }
    }
}

impl SwarmConfig {
    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let bad = |msg: &str| Err(ConfigError::Invalid(msg.to_string()));
        if self.n_particles < 2 {
            return bad("n_particles must be at least 2");
        }
        if !(self.reset_rate > 0.0 && self.reset_rate < 1.0) {
            return bad("reset_rate must lie in (0, 1)");
        }
        if self.entropy_bins < 2 {
            return bad("entropy_bins must be at least 2");
        }
        for (name, r) in [("w_range", self.w_range), ("c1_range", self.c1_range), ("c2_range", self.c2_range)] {
            if !(r.min <= r.max) || !r.min.is_finite() || !r.max.is_finite() {
                return Err(ConfigError::Invalid(format!("{name} must satisfy min <= max")));
            }
        }
        if !(self.v_max_fraction > 0.0 && self.v_max_fraction.is_finite()) {
            return bad("v_max_fraction must be positive");
        }
        if self.pool_capacity == 0 {
            return bad("pool_capacity must be at least 1");
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Particle {
    pub position: Vec<f64>,
    pub velocity: Vec<f64>,
    pub pbest: Vec<f64>,
    pub pbest_fitness: f64,
    /// Fitness of `position`, if it has been evaluated since the last move.
    pub fitness: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SwarmState {
    pub particles: Vec<Particle>,
    pub gbest: Vec<f64>,
    pub gbest_fitness: f64,
    pub entropy: f64,
    pub params: Params,
    pub iteration: usize,
}

/// Per-iteration metrics emitted by every optimizer.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IterationRecord {
    pub iteration: usize,
    pub gbest_fitness: f64,
    pub entropy: f64,
    pub w: f64,
    pub c1: f64,
    pub c2: f64,
    pub pool_size: usize,
}

/// A swarm strategy. One call to [`Optimizer::step`] is one iteration.
pub trait Optimizer: Send {
    fn name(&self) -> &'static str;
    fn state(&self) -> &SwarmState;
    fn pool(&self) -> &TrajectoryPool;
    fn step(&mut self, fitness: &dyn Fitness) -> IterationRecord;

    /// Re-evaluates particle memory under a changed objective and empties the
    /// pool, keeping positions and velocities (warm start).
    fn rebase(&mut self, fitness: &dyn Fitness);

    fn pool_best(&self) -> Option<&PoolEntry> {
        self.pool().best()
    }
}

pub type OptimizerFactory = fn(&SwarmConfig, SearchBounds) -> Result<Box<dyn Optimizer>, ConfigError>;

/// Name-indexed set of optimizer constructors.
#[derive(Clone)]
pub struct OptimizerRegistry {
    entries: BTreeMap<String, OptimizerFactory>,
}

impl OptimizerRegistry {
    pub fn empty() -> Self {
        Self { entries: BTreeMap::new() }
    }

    pub fn builtin() -> Self {
        let mut r = Self::empty();
        r.register(PePso::NAME, |c, b| Ok(Box::new(PePso::new(c.clone(), b)?)));
        r.register(VanillaPso::NAME, |c, b| Ok(Box::new(VanillaPso::new(c.clone(), b)?)));
        r
    }

    pub fn register(&mut self, name: &str, factory: OptimizerFactory) {
        self.entries.insert(name.to_string(), factory);
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.entries.keys().map(String::as_str)
    }

    pub fn contains(&self, name: &str) -> bool {
        self.entries.contains_key(name)
    }

    pub fn create(&self, name: &str, config: &SwarmConfig, bounds: SearchBounds) -> Result<Box<dyn Optimizer>, ConfigError> {
        let factory = self.entries.get(name).ok_or_else(|| ConfigError::UnknownOptimizer {
            name: name.to_string(),
            known: self.names().collect::<Vec<_>>().join(", "),
        })?;
        factory(config, bounds)
    }
}

impl Default for OptimizerRegistry {
    fn default() -> Self {
        Self::builtin()
    }
}
