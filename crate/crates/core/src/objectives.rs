//! Weighted multi-objective costs for trajectories and task allocations, and
//! the legality predicate used to admit trajectories into the pool.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::allocation::Assignment;
use crate::environment::Scenario;
use crate::geometry::SampledPath;
use crate::Vec3;

/// Separation floor for the inverse-distance collision term (meters).
pub const SEPARATION_FLOOR: f64 = 0.1;
/// Endpoint tolerance for legality (meters).
pub const ENDPOINT_TOLERANCE: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum CostError {
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("invalid assignment: {0}")]
    InvalidAssignment(String),
}

/// Commanded endpoints of one flight leg.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Leg {
    pub start: Vec3,
    pub goal: Vec3,
}

impl Leg {
    pub fn new(start: Vec3, goal: Vec3) -> Self {
        Self { start, goal }
    }

    pub fn length(&self) -> f64 {
        (self.goal - self.start).norm()
    }
}

/// Raw trajectory cost terms and their weighted sum.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CostBreakdown {
    pub distance: f64,
    pub safety: f64,
    pub collision: f64,
    pub energy: f64,
    pub time: f64,
    pub total: f64,
}

impl CostBreakdown {
    pub fn terms(&self) -> [f64; 5] {
        [self.distance, self.safety, self.collision, self.energy, self.time]
    }

    fn weighted(terms: [f64; 5], weights: &[f64; 5]) -> Self {
        let total = terms.iter().zip(weights).map(|(t, w)| t * w).sum();
        let [distance, safety, collision, energy, time] = terms;
        Self { distance, safety, collision, energy, time, total }
    }
}

/// Trapezoid weights over the sample parameters.
fn trapezoid_weights(params: &[f64]) -> impl Iterator<Item = f64> + '_ {
    let n = params.len();
    (0..n).map(move |j| {
        let left = if j > 0 { params[j] - params[j - 1] } else { 0.0 };
        let right = if j + 1 < n { params[j + 1] - params[j] } else { 0.0 };
        0.5 * (left + right)
    })
}

/// Five-term trajectory cost:
///
/// * distance `D` is the sampled arc length;
/// * safety `S = sum max(0, r_safe - clearance)^2` over samples;
/// * collision `C = max 1 / max(eps_d, |p(t) - p_l(t)|)` over samples and peers,
///   comparing equal sample indices;
/// * energy `E = alpha D + beta sum |v|^2 dt` (trapezoid rule in the spline parameter);
/// * time `T = D / cruise_speed`.
pub fn trajectory_cost(path: &SampledPath, scenario: &Scenario, peers: &[&SampledPath]) -> Result<CostBreakdown, CostError> {
    let velocities = path
        .velocities()
        .ok_or_else(|| CostError::InvalidConfig("trajectory cost needs sampled velocities".into()))?;
    if let Some(p) = peers.iter().find(|p| p.len() != path.len()) {
        return Err(CostError::InvalidConfig(format!(
            "peer path has {} samples, expected {}",
            p.len(),
            path.len()
        )));
    }

    let distance = path.arc_length();
    let safety = path
        .points()
        .iter()
        .map(|p| (scenario.r_safe - scenario.clearance(p)).max(0.0).powi(2))
        .sum();
    let collision = collision_term(path, peers);
    let effort: f64 = velocities
        .iter()
        .zip(trapezoid_weights(path.params()))
        .map(|(v, dt)| v.norm_squared() * dt)
        .sum();
    let energy = scenario.energy_coeffs.alpha * distance + scenario.energy_coeffs.beta * effort;
    let time = distance / scenario.cruise_speed;

    Ok(CostBreakdown::weighted(
        [distance, safety, collision, energy, time],
        &scenario.weights.trajectory,
    ))
}

fn collision_term(path: &SampledPath, peers: &[&SampledPath]) -> f64 {
    peers
        .iter()
        .flat_map(|peer| path.points().iter().zip(peer.points()))
        .map(|(a, b)| 1.0 / (a - b).norm().max(SEPARATION_FLOOR))
        .fold(0.0, f64::max)
}

/// Legality `L(P)`: every sample inside the bounds with clearance at least
/// `r_safe`, and endpoints on the commanded start and goal.
pub fn is_legal(path: &SampledPath, scenario: &Scenario, leg: &Leg) -> bool {
    (path.first() - leg.start).norm() <= ENDPOINT_TOLERANCE
        && (path.last() - leg.goal).norm() <= ENDPOINT_TOLERANCE
        && path
            .points()
            .iter()
            .all(|p| scenario.bounds.contains(p) && scenario.clearance(p) >= scenario.r_safe)
}

/// Allocation cost terms and their weighted sum.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AllocationCost {
    pub total_distance: f64,
    pub max_time: f64,
    pub energy_violation: f64,
    pub total: f64,
    /// Tour length of each UAV.
    pub tour_distances: Vec<f64>,
}

/// Open-tour allocation cost. Leg distances `d_ij` are Euclidean, leg times
/// are `d_ij / cruise_speed` and leg energies are `alpha * d_ij`; energy over a
/// UAV's budget is penalized quadratically.
pub fn allocation_cost(assignment: &Assignment, scenario: &Scenario) -> Result<AllocationCost, CostError> {
    let tours = assignment.tours();
    if tours.len() != scenario.n_uavs() {
        return Err(CostError::InvalidAssignment(format!(
            "{} tours for {} UAVs",
            tours.len(),
            scenario.n_uavs()
        )));
    }
    let mut seen = vec![0usize; scenario.n_tasks()];
    for &t in tours.iter().flatten() {
        match seen.get_mut(t) {
            Some(c) => *c += 1,
            None => return Err(CostError::InvalidAssignment(format!("task index {t} out of range"))),
        }
    }
    if let Some((t, c)) = seen.iter().enumerate().find(|(_, c)| **c != 1) {
        return Err(CostError::InvalidAssignment(format!("task {t} covered {c} times")));
    }

    let mut tour_distances = Vec::with_capacity(tours.len());
    let mut energy_violation = 0.0;
    for (uav, tour) in scenario.uavs.iter().zip(tours) {
        let mut at = uav.start;
        let mut d = 0.0;
        for &t in tour {
            d += (scenario.tasks[t] - at).norm();
            at = scenario.tasks[t];
        }
        if let Some(budget) = uav.energy_budget {
            energy_violation += (scenario.energy_coeffs.alpha * d - budget).max(0.0).powi(2);
        }
        tour_distances.push(d);
    }
    let total_distance: f64 = tour_distances.iter().sum();
    let max_time = tour_distances.iter().fold(0.0, |m: f64, d| m.max(d / scenario.cruise_speed));
    let [w1, w2, w3] = scenario.weights.allocation;
    Ok(AllocationCost {
        total_distance,
        max_time,
        energy_violation,
        total: w1 * total_distance + w2 * max_time + w3 * energy_violation,
        tour_distances,
    })
}
