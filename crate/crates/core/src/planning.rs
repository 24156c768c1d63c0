//! Single-leg trajectory planning.
//!
//! A leg is flown along a clamped B-spline whose first and last control points
//! are pinned to the leg's start and goal. The interior control points,
//! flattened `[x0, y0, z0, x1, ...]`, form the swarm's decision vector; each
//! coordinate is bounded by the world box.

use std::sync::Arc;
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::environment::Scenario;
use crate::geometry::{BSplineTrajectory, BasisTable, GeometryError, KnotVector, SampledPath, DEFAULT_ORDER, DEFAULT_SAMPLES};
use crate::objectives::{is_legal, trajectory_cost, CostBreakdown, CostError, Leg, ENDPOINT_TOLERANCE};
use crate::pso::{ConfigError, Evaluation, Fitness, IterationRecord, Optimizer, OptimizerRegistry, SearchBounds, SwarmConfig};
use crate::Vec3;

pub const DEFAULT_FREE_CONTROL_POINTS: usize = 6;

#[derive(Debug, Error)]
pub enum PlanError {
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Cost(#[from] CostError),
    #[error("optimizer dimension {optimizer} does not match leg dimension {problem}")]
    DimensionMismatch { optimizer: usize, problem: usize },
}

fn default_order() -> usize {
    DEFAULT_ORDER
}
fn default_free() -> usize {
    DEFAULT_FREE_CONTROL_POINTS
}
fn default_samples() -> usize {
    DEFAULT_SAMPLES
}

/// Spline shape shared by every leg.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PathEncoding {
    #[serde(default = "default_order")]
    pub order: usize,
    #[serde(default = "default_free")]
    pub free_control_points: usize,
    #[serde(default = "default_samples")]
    pub samples: usize,
}

impl Default for PathEncoding {
    fn default() -> Self {
        Self { order: DEFAULT_ORDER, free_control_points: DEFAULT_FREE_CONTROL_POINTS, samples: DEFAULT_SAMPLES }
    }
}

impl PathEncoding {
    pub fn dimension(&self) -> usize {
        3 * self.free_control_points
    }

    pub fn n_control(&self) -> usize {
        self.free_control_points + 2
    }

    pub fn basis_table(&self) -> Result<BasisTable, GeometryError> {
        let knots = KnotVector::clamped_uniform(self.n_control(), self.order)?;
        BasisTable::new(&knots, self.order, self.samples)
    }
}

/// A candidate decoded into geometry and scored.
#[derive(Debug, Clone, PartialEq)]
pub struct PlannedTrajectory {
    pub decision: Vec<f64>,
    pub trajectory: BSplineTrajectory,
    pub path: SampledPath,
    pub cost: CostBreakdown,
    pub legal: bool,
}

/// Fitness of one leg: trajectory cost against the current scenario and peer
/// paths, legal when the sampled path satisfies [`is_legal`].
#[derive(Debug, Clone)]
pub struct LegProblem {
    scenario: Scenario,
    leg: Leg,
    peers: Vec<SampledPath>,
    peer_versions: Vec<u64>,
    encoding: PathEncoding,
    table: Arc<BasisTable>,
}

impl LegProblem {
    pub fn new(scenario: Scenario, leg: Leg, encoding: PathEncoding) -> Result<Self, PlanError> {
        let table = Arc::new(encoding.basis_table()?);
        if encoding.free_control_points == 0 {
            return Err(GeometryError::InvalidConfig("need at least one free control point".into()).into());
        }
        Ok(Self { scenario, leg, peers: Vec::new(), peer_versions: Vec::new(), encoding, table })
    }

    pub fn scenario(&self) -> &Scenario {
        &self.scenario
    }

    pub fn leg(&self) -> &Leg {
        &self.leg
    }

    pub fn encoding(&self) -> &PathEncoding {
        &self.encoding
    }

    pub fn peers(&self) -> &[SampledPath] {
        &self.peers
    }

    /// Versions of the peer paths last installed with [`set_peers`](Self::set_peers).
    pub fn peer_versions(&self) -> &[u64] {
        &self.peer_versions
    }

    pub fn set_scenario(&mut self, scenario: Scenario) {
        self.scenario = scenario;
    }

    pub fn set_leg(&mut self, leg: Leg) {
        self.leg = leg;
    }

    /// Peer paths must be sampled on the same grid as this problem.
    pub fn set_peers(&mut self, peers: Vec<(u64, SampledPath)>) -> Result<(), PlanError> {
        if let Some((_, p)) = peers.iter().find(|(_, p)| p.len() != self.encoding.samples) {
            return Err(CostError::InvalidConfig(format!(
                "peer path has {} samples, expected {}",
                p.len(),
                self.encoding.samples
            ))
            .into());
        }
        (self.peer_versions, self.peers) = peers.into_iter().unzip();
        Ok(())
    }

    pub fn is_degenerate(&self) -> bool {
        self.leg.length() <= ENDPOINT_TOLERANCE
    }

    pub fn search_bounds(&self) -> Result<SearchBounds, ConfigError> {
        let b = &self.scenario.bounds;
        let n = self.encoding.free_control_points;
        let lower = (0..n).flat_map(|_| b.min.iter().copied()).collect();
        let upper = (0..n).flat_map(|_| b.max.iter().copied()).collect();
        SearchBounds::new(lower, upper)
    }

    /// All interior control points at the start: the zero-length trajectory.
    pub fn stationary_decision(&self) -> Vec<f64> {
        (0..self.encoding.free_control_points).flat_map(|_| self.leg.start.iter().copied()).collect()
    }

    /// Evenly spaced interior control points on the start-goal segment.
    pub fn straight_decision(&self) -> Vec<f64> {
        let n = self.encoding.free_control_points;
        (1..=n)
            .flat_map(|i| {
                let t = i as f64 / (n + 1) as f64;
                let p = self.leg.start + (self.leg.goal - self.leg.start) * t;
                [p.x, p.y, p.z]
            })
            .collect()
    }

    pub fn control_points(&self, x: &[f64]) -> Vec<Vec3> {
        let mut control = Vec::with_capacity(self.encoding.n_control());
        control.push(self.leg.start);
        control.extend(x.chunks_exact(3).map(|c| Vec3::new(c[0], c[1], c[2])));
        control.push(self.leg.goal);
        control
    }

    pub fn sample(&self, x: &[f64]) -> Result<SampledPath, PlanError> {
        if x.len() != self.encoding.dimension() {
            return Err(GeometryError::InvalidConfig(format!(
                "decision vector has {} entries, expected {}",
                x.len(),
                self.encoding.dimension()
            ))
            .into());
        }
        Ok(self.table.sample(&self.control_points(x), true)?)
    }

    pub fn realize(&self, x: &[f64]) -> Result<PlannedTrajectory, PlanError> {
        let path = self.sample(x)?;
        let peers: Vec<&SampledPath> = self.peers.iter().collect();
        let cost = trajectory_cost(&path, &self.scenario, &peers)?;
        let legal = is_legal(&path, &self.scenario, &self.leg);
        let trajectory = BSplineTrajectory::clamped(self.encoding.order, self.control_points(x))?;
        Ok(PlannedTrajectory { decision: x.to_vec(), trajectory, path, cost, legal })
    }
}

impl Fitness for LegProblem {
    fn dimension(&self) -> usize {
        self.encoding.dimension()
    }

    fn evaluate(&self, x: &[f64]) -> Evaluation {
        let Ok(path) = self.sample(x) else {
            return Evaluation { fitness: f64::INFINITY, legal: false };
        };
        let peers: Vec<&SampledPath> = self.peers.iter().collect();
        match trajectory_cost(&path, &self.scenario, &peers) {
            Ok(c) => Evaluation { fitness: c.total, legal: is_legal(&path, &self.scenario, &self.leg) },
            Err(_) => Evaluation { fitness: f64::INFINITY, legal: false },
        }
    }
}

/// Optimizer bound to a leg. The swarm persists across replans of the same
/// leg; changes to the problem re-score the swarm and empty the pool.
pub struct Planner {
    optimizer: Box<dyn Optimizer>,
    problem: LegProblem,
}

impl Planner {
    pub fn new(optimizer: Box<dyn Optimizer>, problem: LegProblem) -> Result<Self, PlanError> {
        let d = optimizer.state().gbest.len();
        if d != problem.dimension() {
            return Err(PlanError::DimensionMismatch { optimizer: d, problem: problem.dimension() });
        }
        Ok(Self { optimizer, problem })
    }

    /// Builds the named optimizer over the leg's search box.
    pub fn with_optimizer(
        registry: &OptimizerRegistry,
        name: &str,
        config: &SwarmConfig,
        problem: LegProblem,
    ) -> Result<Self, PlanError> {
        let optimizer = registry.create(name, config, problem.search_bounds()?)?;
        Self::new(optimizer, problem)
    }

    pub fn problem(&self) -> &LegProblem {
        &self.problem
    }

    pub fn optimizer(&self) -> &dyn Optimizer {
        self.optimizer.as_ref()
    }

    /// Applies `change` to the problem and re-scores the swarm against it.
    pub fn update(&mut self, change: impl FnOnce(&mut LegProblem) -> Result<(), PlanError>) -> Result<(), PlanError> {
        change(&mut self.problem)?;
        self.optimizer.rebase(&self.problem);
        Ok(())
    }

    pub fn step(&mut self) -> IterationRecord {
        self.optimizer.step(&self.problem)
    }

    /// Runs up to `budget` iterations and returns the best legal decision
    /// vector seen, if any. Degenerate legs return the stationary trajectory
    /// without stepping.
    pub fn replan(&mut self, budget: usize) -> Option<Vec<f64>> {
        self.replan_observed(budget, |_| {})
    }

    /// As [`replan`](Self::replan), handing each iteration record to `observe`.
    pub fn replan_observed(&mut self, budget: usize, mut observe: impl FnMut(&IterationRecord)) -> Option<Vec<f64>> {
        if self.problem.is_degenerate() {
            return Some(self.problem.stationary_decision());
        }
        for _ in 0..budget {
            observe(&self.step());
        }
        self.best_decision()
    }

    /// Steps until `t_max` of wall-clock time has elapsed (at least one
    /// iteration), then returns the pool's best.
    pub fn replan_for(&mut self, t_max: Duration, mut observe: impl FnMut(&IterationRecord)) -> Option<Vec<f64>> {
        if self.problem.is_degenerate() {
            return Some(self.problem.stationary_decision());
        }
        let start = Instant::now();
        loop {
            observe(&self.step());
            if start.elapsed() >= t_max {
                break;
            }
        }
        self.best_decision()
    }

    pub fn best_decision(&self) -> Option<Vec<f64>> {
        self.optimizer.pool_best().map(|e| e.position.clone())
    }

    pub fn best(&self) -> Option<PlannedTrajectory> {
        if self.problem.is_degenerate() {
            return self.problem.realize(&self.problem.stationary_decision()).ok();
        }
        self.best_decision().and_then(|x| self.problem.realize(&x).ok())
    }
}
