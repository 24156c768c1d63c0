//! Multi-UAV mission simulation.
//!
//! Tasks are allocated once, then every UAV plans its legs with its own swarm
//! while reading the latest trajectories its peers have published. A simulated
//! clock moves UAVs along accepted trajectories at cruise speed; scripted
//! environment changes invalidate trajectories and trigger replanning.
//!
//! Planning is serial in UAV index order and each planner has its own seed, so
//! with an iteration budget the whole log is a pure function of the config.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::allocation::{solve_allocation, AllocationError, Assignment, GaConfig};
use crate::environment::{Obstacle, Scenario, ScenarioError};
use crate::geometry::SampledPath;
use crate::objectives::{is_legal, AllocationCost, CostBreakdown, Leg};
use crate::planning::{LegProblem, PathEncoding, PlanError, Planner};
use crate::pso::{IterationRecord, OptimizerRegistry, SwarmConfig};
use crate::Vec3;

#[derive(Debug, Error)]
pub enum MissionError {
    #[error("invalid mission configuration: {0}")]
    InvalidConfig(String),
    #[error(transparent)]
    Scenario(#[from] ScenarioError),
    #[error("allocation failed: {0}")]
    Allocation(#[from] AllocationError),
    #[error("planning failed: {0}")]
    Plan(#[from] PlanError),
    #[error("i/o error on {path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("UAV {uav} found no legal trajectory for leg {leg} (task {task}) within {limit}")]
    Unreachable { uav: usize, leg: usize, task: usize, limit: String },
}

/// Scripted change to the world.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum EnvironmentChange {
    ObstacleAdd { obstacle: Obstacle },
    /// Removes the obstacle at this index of the current obstacle list.
    ObstacleRemove { index: usize },
    TaskMove { task: usize, position: Vec3 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScheduledEvent {
    pub time: f64,
    #[serde(flatten)]
    pub change: EnvironmentChange,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BudgetMode {
    /// Fixed iteration count per replan; fully deterministic.
    Iterations,
    /// Step until `t_max` seconds of wall-clock time have elapsed.
    Wallclock,
}

fn default_optimizer() -> String {
    "pe-pso".into()
}
fn default_t_max() -> f64 {
    0.5
}
fn default_iterations() -> usize {
    100
}
fn default_budget_mode() -> BudgetMode {
    BudgetMode::Iterations
}
fn default_sim_step() -> f64 {
    0.5
}
fn default_max_sim_time() -> f64 {
    600.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MissionConfig {
    pub scenario: Scenario,
    #[serde(default)]
    pub swarm: SwarmConfig,
    #[serde(default)]
    pub ga: GaConfig,
    #[serde(default)]
    pub encoding: PathEncoding,
    #[serde(default = "default_optimizer")]
    pub optimizer: String,
    #[serde(default = "default_budget_mode")]
    pub budget_mode: BudgetMode,
    /// Iterations per replan in iteration mode.
    #[serde(default = "default_iterations")]
    pub replan_iterations: usize,
    /// Wall-clock seconds per replan in wall-clock mode.
    #[serde(default = "default_t_max")]
    pub t_max: f64,
    #[serde(default)]
    pub events: Vec<ScheduledEvent>,
    #[serde(default = "default_sim_step")]
    pub sim_step: f64,
    #[serde(default = "default_max_sim_time")]
    pub max_sim_time: f64,
}

impl MissionConfig {
    pub fn new(scenario: Scenario) -> Self {
        Self {
            scenario,
            swarm: SwarmConfig::default(),
            ga: GaConfig::default(),
            encoding: PathEncoding::default(),
            optimizer: default_optimizer(),
            budget_mode: default_budget_mode(),
            replan_iterations: default_iterations(),
            t_max: default_t_max(),
            events: Vec::new(),
            sim_step: default_sim_step(),
            max_sim_time: default_max_sim_time(),
        }
    }

    /// Sets the base seed of both the allocator and the planners.
    pub fn with_seed(mut self, seed: u64) -> Self {
        self.swarm.seed = seed;
        self.ga.seed = seed;
        self
    }

    pub fn validate(&self) -> Result<(), MissionError> {
        let bad = |m: String| Err(MissionError::InvalidConfig(m));
        self.scenario.validate()?;
        self.swarm.validate().map_err(|e| MissionError::InvalidConfig(e.to_string()))?;
        self.ga.validate()?;
        if !(self.t_max > 0.0) {
            return bad(format!("t_max must be positive, got {}", self.t_max));
        }
        if !(self.sim_step > 0.0) || !(self.max_sim_time > 0.0) {
            return bad("sim_step and max_sim_time must be positive".into());
        }
        if self.replan_iterations == 0 {
            return bad("replan_iterations must be at least 1".into());
        }
        if !OptimizerRegistry::builtin().contains(&self.optimizer) {
            return bad(format!("unknown optimizer `{}`", self.optimizer));
        }
        let mut n_obstacles = self.scenario.obstacles.len();
        let mut last = f64::NEG_INFINITY;
        for (i, e) in self.events.iter().enumerate() {
            if !e.time.is_finite() || e.time < last {
                return bad(format!("events[{i}].time must be finite and non-decreasing"));
            }
            last = e.time;
            match &e.change {
                EnvironmentChange::ObstacleAdd { obstacle } => {
                    if !(obstacle.radius > 0.0) {
                        return bad(format!("events[{i}].obstacle.radius must be positive"));
                    }
                    n_obstacles += 1;
                }
                EnvironmentChange::ObstacleRemove { index } => {
                    if *index >= n_obstacles {
                        return bad(format!("events[{i}].index {index} exceeds the {n_obstacles} obstacles present"));
                    }
                    n_obstacles -= 1;
                }
                EnvironmentChange::TaskMove { task, .. } => {
                    if *task >= self.scenario.n_tasks() {
                        return bad(format!("events[{i}].task {task} does not exist"));
                    }
                }
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ReplanReason {
    NewLeg,
    Invalidated,
    Stalled,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AcceptedTrajectory {
    pub uav: usize,
    /// Position of the leg in the UAV's tour.
    pub leg: usize,
    pub task: usize,
    /// Per-UAV acceptance counter.
    pub index: usize,
    pub replan: usize,
    pub time: f64,
    /// Board-wide publication counter.
    pub version: u64,
    pub control_points: Vec<Vec3>,
    pub path: SampledPath,
    pub cost: CostBreakdown,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReplanRecord {
    pub replan: usize,
    pub uav: usize,
    pub leg: usize,
    pub reason: ReplanReason,
    pub time: f64,
    pub iterations: usize,
    /// Iteration within this replan after which the pool first held an entry.
    pub first_legal_iteration: Option<usize>,
    pub accepted: bool,
    /// `(uav, version)` of every peer path the planner scored against.
    pub peer_versions: Vec<(usize, u64)>,
    pub wall_ms: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceRecord {
    pub replan: usize,
    pub uav: usize,
    #[serde(flatten)]
    pub record: IterationRecord,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EventRecord {
    pub time: f64,
    pub change: EnvironmentChange,
    /// UAVs whose active trajectory failed the legality re-check.
    pub invalidated: Vec<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Visit {
    pub task: usize,
    pub time: f64,
    pub position: Vec3,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MissionLog {
    pub assignment: Assignment,
    pub allocation_cost: AllocationCost,
    pub accepted: Vec<AcceptedTrajectory>,
    pub replans: Vec<ReplanRecord>,
    pub convergence: Vec<ConvergenceRecord>,
    pub events: Vec<EventRecord>,
    /// Per UAV: `(time, position)` at every simulation step.
    pub executed: Vec<Vec<(f64, Vec3)>>,
    pub visits: Vec<Vec<Visit>>,
    pub final_time: f64,
    /// False when `max_sim_time` ran out before every tour finished.
    pub complete: bool,
    /// Scenario after all applied events.
    pub final_scenario: Scenario,
}

impl MissionLog {
    pub fn stalls(&self) -> usize {
        self.replans.iter().filter(|r| !r.accepted).count()
    }
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Seed of the planner for `uav`'s `leg`, derived from the base seed.
pub fn planner_seed(base: u64, uav: usize, leg: usize) -> u64 {
    splitmix64(splitmix64(base ^ splitmix64(uav as u64)) ^ leg as u64)
}

struct Active {
    path: SampledPath,
    leg: Leg,
    travelled: f64,
}

struct UavState {
    position: Vec3,
    tour: Vec<usize>,
    leg: usize,
    planner: Option<Planner>,
    active: Option<Active>,
    pending: Option<ReplanReason>,
    /// Iterations (or seconds) spent on this leg without a legal candidate.
    fruitless: f64,
    accepted: usize,
}

impl UavState {
    fn done(&self) -> bool {
        self.leg >= self.tour.len()
    }
}

struct Board {
    entries: Vec<Option<(u64, SampledPath)>>,
    version: u64,
}

impl Board {
    fn peers_of(&self, k: usize) -> Vec<(usize, u64, SampledPath)> {
        self.entries
            .iter()
            .enumerate()
            .filter(|(j, _)| *j != k)
            .filter_map(|(j, e)| e.as_ref().map(|(v, p)| (j, *v, p.clone())))
            .collect()
    }

    fn publish(&mut self, k: usize, path: SampledPath) -> u64 {
        self.version += 1;
        self.entries[k] = Some((self.version, path));
        self.version
    }
}

fn apply_change(scenario: &mut Scenario, change: &EnvironmentChange) -> Result<(), MissionError> {
    match change {
        EnvironmentChange::ObstacleAdd { obstacle } => scenario.obstacles.push(*obstacle),
        EnvironmentChange::ObstacleRemove { index } => {
            if *index >= scenario.obstacles.len() {
                return Err(MissionError::InvalidConfig(format!("no obstacle {index} to remove")));
            }
            scenario.obstacles.remove(*index);
        }
        EnvironmentChange::TaskMove { task, position } => {
            let t = scenario
                .tasks
                .get_mut(*task)
                .ok_or_else(|| MissionError::InvalidConfig(format!("no task {task} to move")))?;
            *t = *position;
        }
    }
    Ok(())
}

struct Simulation<'a> {
    config: &'a MissionConfig,
    registry: OptimizerRegistry,
    scenario: Scenario,
    uavs: Vec<UavState>,
    board: Board,
    log: MissionLog,
    time: f64,
}

impl Simulation<'_> {
    fn budget_limit(&self) -> f64 {
        match self.config.budget_mode {
            BudgetMode::Iterations => 10.0 * self.config.replan_iterations as f64,
            BudgetMode::Wallclock => 10.0 * self.config.t_max,
        }
    }

    fn plan(&mut self, k: usize) -> Result<(), MissionError> {
        let Some(reason) = self.uavs[k].pending.take() else {
            return Ok(());
        };
        let (leg_index, task) = {
            let u = &self.uavs[k];
            (u.leg, u.tour[u.leg])
        };
        let leg = Leg::new(self.uavs[k].position, self.scenario.tasks[task]);
        let peers = self.board.peers_of(k);
        let peer_versions: Vec<(usize, u64)> = peers.iter().map(|(j, v, _)| (*j, *v)).collect();
        let peer_paths: Vec<(u64, SampledPath)> = peers.into_iter().map(|(_, v, p)| (v, p)).collect();

        let planner = match self.uavs[k].planner.take() {
            Some(mut p) => {
                let scenario = self.scenario.clone();
                p.update(|pr| {
                    pr.set_scenario(scenario);
                    pr.set_leg(leg);
                    pr.set_peers(peer_paths)
                })?;
                p
            }
            None => {
                let mut problem = LegProblem::new(self.scenario.clone(), leg, self.config.encoding)?;
                problem.set_peers(peer_paths)?;
                let swarm = self.config.swarm.clone().with_seed(planner_seed(self.config.swarm.seed, k, leg_index));
                Planner::with_optimizer(&self.registry, &self.config.optimizer, &swarm, problem)?
            }
        };
        let planner = self.uavs[k].planner.insert(planner);

        let replan = self.log.replans.len();
        let mut iterations = 0;
        let mut first_legal = None;
        let mut records = Vec::new();
        let observe = |r: &IterationRecord| {
            iterations += 1;
            if first_legal.is_none() && r.pool_size > 0 {
                first_legal = Some(iterations);
            }
            records.push(ConvergenceRecord { replan, uav: k, record: *r });
        };
        let started = Instant::now();
        let best = match self.config.budget_mode {
            BudgetMode::Iterations => planner.replan_observed(self.config.replan_iterations, observe),
            BudgetMode::Wallclock => planner.replan_for(Duration::from_secs_f64(self.config.t_max), observe),
        };
        let elapsed = started.elapsed();
        self.log.convergence.extend(records);

        let accepted = match best {
            Some(x) => {
                let t = planner.problem().realize(&x)?;
                debug_assert!(t.legal);
                let version = self.board.publish(k, t.path.clone());
                let u = &mut self.uavs[k];
                self.log.accepted.push(AcceptedTrajectory {
                    uav: k,
                    leg: leg_index,
                    task,
                    index: u.accepted,
                    replan,
                    time: self.time,
                    version,
                    control_points: t.trajectory.control_points().to_vec(),
                    path: t.path.clone(),
                    cost: t.cost,
                });
                u.accepted += 1;
                u.fruitless = 0.0;
                u.active = Some(Active { path: t.path, leg, travelled: 0.0 });
                true
            }
            None => {
                let u = &mut self.uavs[k];
                u.fruitless += match self.config.budget_mode {
                    BudgetMode::Iterations => iterations as f64,
                    BudgetMode::Wallclock => elapsed.as_secs_f64(),
                };
                u.pending = Some(ReplanReason::Stalled);
                false
            }
        };
        self.log.replans.push(ReplanRecord {
            replan,
            uav: k,
            leg: leg_index,
            reason,
            time: self.time,
            iterations,
            first_legal_iteration: first_legal,
            accepted,
            peer_versions,
            wall_ms: elapsed.as_secs_f64() * 1e3,
        });
        if !accepted && self.uavs[k].fruitless >= self.budget_limit() {
            let limit = match self.config.budget_mode {
                BudgetMode::Iterations => format!("{} iterations", self.budget_limit()),
                BudgetMode::Wallclock => format!("{} s", self.budget_limit()),
            };
            return Err(MissionError::Unreachable { uav: k, leg: leg_index, task, limit });
        }
        Ok(())
    }

    fn advance(&mut self) {
        let step = self.scenario.cruise_speed * self.config.sim_step;
        self.time += self.config.sim_step;
        for (k, u) in self.uavs.iter_mut().enumerate() {
            if let Some(a) = &mut u.active {
                a.travelled += step;
                u.position = a.path.point_at_distance(a.travelled);
                if a.travelled >= a.path.arc_length() {
                    u.position = a.leg.goal;
                    self.log.visits[k].push(Visit { task: u.tour[u.leg], time: self.time, position: u.position });
                    u.active = None;
                    u.planner = None;
                    u.leg += 1;
                    if u.done() {
                        self.board.entries[k] = None;
                    } else {
                        u.pending = Some(ReplanReason::NewLeg);
                    }
                }
            }
            self.log.executed[k].push((self.time, u.position));
        }
    }

    fn apply_events(&mut self, next_event: &mut usize) -> Result<(), MissionError> {
        while let Some(e) = self.config.events.get(*next_event).filter(|e| e.time <= self.time) {
            *next_event += 1;
            apply_change(&mut self.scenario, &e.change)?;
            let mut invalidated = Vec::new();
            for (k, u) in self.uavs.iter_mut().enumerate() {
                let Some(a) = &u.active else { continue };
                let leg = Leg::new(a.leg.start, self.scenario.tasks[u.tour[u.leg]]);
                if !is_legal(&a.path, &self.scenario, &leg) {
                    u.active = None;
                    u.pending = Some(ReplanReason::Invalidated);
                    self.board.entries[k] = None;
                    invalidated.push(k);
                }
            }
            self.log.events.push(EventRecord { time: e.time, change: e.change.clone(), invalidated });
        }
        Ok(())
    }
}

/// Runs the mission to completion or until `max_sim_time`.
pub fn run_mission(config: &MissionConfig) -> Result<MissionLog, MissionError> {
    config.validate()?;
    let scenario = config.scenario.clone();
    let allocation = solve_allocation(&scenario, &config.ga)?;
    let n = scenario.n_uavs();
    let uavs = scenario
        .uavs
        .iter()
        .zip(allocation.assignment.tours())
        .map(|(uav, tour)| UavState {
            position: uav.start,
            tour: tour.clone(),
            leg: 0,
            planner: None,
            active: None,
            pending: (!tour.is_empty()).then_some(ReplanReason::NewLeg),
            fruitless: 0.0,
            accepted: 0,
        })
        .collect::<Vec<_>>();
    let executed = uavs.iter().map(|u| vec![(0.0, u.position)]).collect();
    let mut sim = Simulation {
        config,
        registry: OptimizerRegistry::builtin(),
        uavs,
        board: Board { entries: vec![None; n], version: 0 },
        log: MissionLog {
            assignment: allocation.assignment,
            allocation_cost: allocation.cost,
            accepted: Vec::new(),
            replans: Vec::new(),
            convergence: Vec::new(),
            events: Vec::new(),
            executed,
            visits: vec![Vec::new(); n],
            final_time: 0.0,
            complete: false,
            final_scenario: scenario.clone(),
        },
        scenario,
        time: 0.0,
    };

    let mut next_event = 0;
    sim.apply_events(&mut next_event)?;
    loop {
        for k in 0..n {
            sim.plan(k)?;
        }
        if sim.uavs.iter().all(UavState::done) {
            sim.log.complete = true;
            break;
        }
        if sim.time >= config.max_sim_time {
            break;
        }
        sim.advance();
        sim.apply_events(&mut next_event)?;
    }
    sim.log.final_time = sim.time;
    sim.log.final_scenario = sim.scenario;
    Ok(sim.log)
}

fn write_file(path: &Path, text: &str) -> Result<(), MissionError> {
    fs::write(path, text).map_err(|source| MissionError::Io { path: path.display().to_string(), source })
}

/// Writes the run directory: `mission.json`, one `uav_<k>_trajectory_<i>.csv`
/// per accepted trajectory, `uav_<k>_executed.csv`, `latency.csv` and
/// `convergence.csv`.
///
/// In iteration mode `latency.csv` holds only deterministic columns and the
/// wall-clock latency goes to `timing.csv`, so repeated runs compare equal.
pub fn write_run_directory(config: &MissionConfig, log: &MissionLog, dir: &Path) -> Result<(), MissionError> {
    fs::create_dir_all(dir).map_err(|source| MissionError::Io { path: dir.display().to_string(), source })?;

    let summary = serde_json::json!({
        "config": config,
        "assignment": log.assignment,
        "allocation_cost": log.allocation_cost,
        "events": log.events,
        "visits": log.visits,
        "final_time": log.final_time,
        "complete": log.complete,
        "replans": log.replans.len(),
        "stalls": log.stalls(),
        "accepted": log.accepted.iter().map(|a| serde_json::json!({
            "uav": a.uav, "leg": a.leg, "task": a.task, "index": a.index,
            "time": a.time, "version": a.version, "cost": a.cost,
        })).collect::<Vec<_>>(),
    });
    let text = serde_json::to_string_pretty(&summary).map_err(ScenarioError::from)?;
    write_file(&dir.join("mission.json"), &text)?;

    for a in &log.accepted {
        let mut csv = String::from("u,x,y,z\n");
        for (u, p) in a.path.params().iter().zip(a.path.points()) {
            let _ = writeln!(csv, "{u},{},{},{}", p.x, p.y, p.z);
        }
        write_file(&dir.join(format!("uav_{}_trajectory_{}.csv", a.uav, a.index)), &csv)?;
    }
    for (k, points) in log.executed.iter().enumerate() {
        let mut csv = String::from("t,x,y,z\n");
        for (t, p) in points {
            let _ = writeln!(csv, "{t},{},{},{}", p.x, p.y, p.z);
        }
        write_file(&dir.join(format!("uav_{k}_executed.csv")), &csv)?;
    }

    let wall_in_latency = config.budget_mode == BudgetMode::Wallclock;
    let mut latency = String::from("replan,uav,leg,reason,time,iterations,first_legal_iteration,accepted");
    latency.push_str(if wall_in_latency { ",wall_ms\n" } else { "\n" });
    let mut timing = String::from("replan,wall_ms\n");
    for r in &log.replans {
        let reason = match r.reason {
            ReplanReason::NewLeg => "new_leg",
            ReplanReason::Invalidated => "invalidated",
            ReplanReason::Stalled => "stalled",
        };
        let first = r.first_legal_iteration.map(|i| i.to_string()).unwrap_or_default();
        let _ = write!(latency, "{},{},{},{reason},{},{},{first},{}", r.replan, r.uav, r.leg, r.time, r.iterations, r.accepted);
        if wall_in_latency {
            let _ = write!(latency, ",{:.3}", r.wall_ms);
        }
        latency.push('\n');
        let _ = writeln!(timing, "{},{:.3}", r.replan, r.wall_ms);
    }
    write_file(&dir.join("latency.csv"), &latency)?;
    if !wall_in_latency {
        write_file(&dir.join("timing.csv"), &timing)?;
    }

    let mut conv = String::from("replan,uav,iteration,gbest_fitness,entropy,w,c1,c2,pool_size\n");
    for c in &log.convergence {
        let r = &c.record;
        let _ = writeln!(conv, "{},{},{},{},{},{},{},{},{}", c.replan, c.uav, r.iteration, r.gbest_fitness, r.entropy, r.w, r.c1, r.c2, r.pool_size);
    }
    write_file(&dir.join("convergence.csv"), &conv)?;
    Ok(())
}
