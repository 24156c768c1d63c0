//! World model: bounds, spherical obstacles, UAV start states and task points.
//!
//! Scenarios are stored as JSON documents:
//!
//! ```json
//! {
//!   "bounds": { "min": [0, 0, 0], "max": [100, 100, 30] },
//!   "obstacles": [ { "center": [50, 50, 10], "radius": 5 } ],
//!   "uavs": [ { "start": [5, 5, 5], "energy_budget": 500 } ],
//!   "tasks": [ [90, 90, 10] ],
//!   "r_safe": 1.0,
//!   "cruise_speed": 2.0,
//!   "weights": { "trajectory": [1, 10, 1, 0.1, 1], "allocation": [1, 1, 1] },
//!   "energy_coeffs": { "alpha": 1.0, "beta": 0.1 }
//! }
//! ```
//!
//! `bounds`, `uavs` and `tasks` are required. Everything else falls back to
//! the defaults in [`Scenario`]. `energy_budget` may be omitted for an
//! unconstrained UAV. Unknown keys are rejected.

use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::Vec3;

pub const DEFAULT_R_SAFE: f64 = 1.0;
pub const DEFAULT_CRUISE_SPEED: f64 = 2.0;
pub const DEFAULT_TRAJECTORY_WEIGHTS: [f64; 5] = [1.0, 10.0, 1.0, 0.1, 1.0];
pub const DEFAULT_ALLOCATION_WEIGHTS: [f64; 3] = [1.0, 1.0, 1.0];
pub const DEFAULT_ENERGY_ALPHA: f64 = 1.0;
pub const DEFAULT_ENERGY_BETA: f64 = 0.1;

#[derive(Debug, Error)]
pub enum ScenarioError {
    #[error("failed to parse scenario: {0}")]
    Parse(#[from] serde_json::Error),
    #[error("invalid scenario field `{field}`: {reason}")]
    Invalid { field: String, reason: String },
    #[error("scenario i/o error: {0}")]
    Io(#[from] std::io::Error),
}

impl ScenarioError {
    fn invalid(field: impl Into<String>, reason: impl Into<String>) -> Self {
        Self::Invalid { field: field.into(), reason: reason.into() }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Obstacle {
    pub center: Vec3,
    pub radius: f64,
}

impl Obstacle {
    pub fn new(center: Vec3, radius: f64) -> Self {
        Self { center, radius }
    }

    /// Signed distance from `point` to the sphere surface.
    pub fn signed_distance(&self, point: &Vec3) -> f64 {
        (point - self.center).norm() - self.radius
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WorldBounds {
    pub min: Vec3,
    pub max: Vec3,
}

impl WorldBounds {
    pub fn new(min: Vec3, max: Vec3) -> Self {
        Self { min, max }
    }

    /// Componentwise containment, boundary inclusive.
    pub fn contains(&self, point: &Vec3) -> bool {
        (0..3).all(|i| self.min[i] <= point[i] && point[i] <= self.max[i])
    }
}

pub fn inside_bounds(point: &Vec3, bounds: &WorldBounds) -> bool {
    bounds.contains(point)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Uav {
    pub start: Vec3,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub energy_budget: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Weights {
    /// `w_1..w_5` for distance, safety, collision, energy and time.
    #[serde(default = "default_trajectory_weights")]
    pub trajectory: [f64; 5],
    /// `w_1..w_3` for total distance, maximum time and energy violation.
    #[serde(default = "default_allocation_weights")]
    pub allocation: [f64; 3],
}

impl Default for Weights {
    fn default() -> Self {
        Self { trajectory: DEFAULT_TRAJECTORY_WEIGHTS, allocation: DEFAULT_ALLOCATION_WEIGHTS }
    }
}

fn default_trajectory_weights() -> [f64; 5] {
    DEFAULT_TRAJECTORY_WEIGHTS
}

fn default_allocation_weights() -> [f64; 3] {
    DEFAULT_ALLOCATION_WEIGHTS
}

/// Coefficients of the energy model `alpha * distance + beta * sum |v|^2 dt`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EnergyCoeffs {
    #[serde(default = "default_alpha")]
    pub alpha: f64,
    #[serde(default = "default_beta")]
    pub beta: f64,
}

impl Default for EnergyCoeffs {
    fn default() -> Self {
        Self { alpha: DEFAULT_ENERGY_ALPHA, beta: DEFAULT_ENERGY_BETA }
    }
}

fn default_alpha() -> f64 {
    DEFAULT_ENERGY_ALPHA
}

fn default_beta() -> f64 {
    DEFAULT_ENERGY_BETA
}

fn default_r_safe() -> f64 {
    DEFAULT_R_SAFE
}

fn default_cruise_speed() -> f64 {
    DEFAULT_CRUISE_SPEED
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub bounds: WorldBounds,
    #[serde(default)]
    pub obstacles: Vec<Obstacle>,
    pub uavs: Vec<Uav>,
    pub tasks: Vec<Vec3>,
    #[serde(default = "default_r_safe")]
    pub r_safe: f64,
    #[serde(default = "default_cruise_speed")]
    pub cruise_speed: f64,
    #[serde(default)]
    pub weights: Weights,
    #[serde(default)]
    pub energy_coeffs: EnergyCoeffs,
}

fn finite(v: &Vec3) -> bool {
    v.iter().all(|c| c.is_finite())
}

impl Scenario {
    /// Scenario with default weights and parameters.
    pub fn new(bounds: WorldBounds, obstacles: Vec<Obstacle>, starts: Vec<Vec3>, tasks: Vec<Vec3>) -> Self {
        Self {
            bounds,
            obstacles,
            uavs: starts.into_iter().map(|start| Uav { start, energy_budget: None }).collect(),
            tasks,
            r_safe: DEFAULT_R_SAFE,
            cruise_speed: DEFAULT_CRUISE_SPEED,
            weights: Weights::default(),
            energy_coeffs: EnergyCoeffs::default(),
        }
    }

    pub fn n_uavs(&self) -> usize {
        self.uavs.len()
    }

    pub fn n_tasks(&self) -> usize {
        self.tasks.len()
    }

    pub fn clearance(&self, point: &Vec3) -> f64 {
        clearance(point, self)
    }

    /// A point is free when it is inside the bounds and at least `r_safe`
    /// away from every obstacle surface.
    pub fn is_free(&self, point: &Vec3) -> bool {
        self.bounds.contains(point) && self.clearance(point) >= self.r_safe
    }

    pub fn validate(&self) -> Result<(), ScenarioError> {
        let b = &self.bounds;
        if !finite(&b.min) || !finite(&b.max) {
            return Err(ScenarioError::invalid("bounds", "corners must be finite"));
        }
        if (0..3).any(|i| b.min[i] >= b.max[i]) {
            return Err(ScenarioError::invalid("bounds", "min must be below max in every axis"));
        }
        if !(self.r_safe > 0.0 && self.r_safe.is_finite()) {
            return Err(ScenarioError::invalid("r_safe", "must be positive and finite"));
        }
        if !(self.cruise_speed > 0.0 && self.cruise_speed.is_finite()) {
            return Err(ScenarioError::invalid("cruise_speed", "must be positive and finite"));
        }
        for (i, o) in self.obstacles.iter().enumerate() {
            if !finite(&o.center) {
                return Err(ScenarioError::invalid(format!("obstacles[{i}].center"), "must be finite"));
            }
            if !(o.radius > 0.0 && o.radius.is_finite()) {
                return Err(ScenarioError::invalid(format!("obstacles[{i}].radius"), "must be positive"));
            }
        }
        if self.uavs.is_empty() {
            return Err(ScenarioError::invalid("uavs", "at least one UAV is required"));
        }
        if self.tasks.is_empty() {
            return Err(ScenarioError::invalid("tasks", "at least one task is required"));
        }
        for (i, u) in self.uavs.iter().enumerate() {
            self.check_point(&u.start, &format!("uavs[{i}].start"))?;
            if let Some(e) = u.energy_budget {
                if !(e >= 0.0 && e.is_finite()) {
                    return Err(ScenarioError::invalid(format!("uavs[{i}].energy_budget"), "must be non-negative"));
                }
            }
        }
        for (i, t) in self.tasks.iter().enumerate() {
            self.check_point(t, &format!("tasks[{i}]"))?;
        }
        let w = &self.weights;
        for (i, x) in w.trajectory.iter().enumerate() {
            if !(*x >= 0.0 && x.is_finite()) {
                return Err(ScenarioError::invalid(format!("weights.trajectory[{i}]"), "must be non-negative"));
            }
        }
        if w.trajectory.iter().all(|x| *x == 0.0) {
            return Err(ScenarioError::invalid("weights.trajectory", "at least one weight must be positive"));
        }
        for (i, x) in w.allocation.iter().enumerate() {
            if !(*x >= 0.0 && x.is_finite()) {
                return Err(ScenarioError::invalid(format!("weights.allocation[{i}]"), "must be non-negative"));
            }
        }
        let e = &self.energy_coeffs;
        if !(e.alpha >= 0.0 && e.alpha.is_finite()) {
            return Err(ScenarioError::invalid("energy_coeffs.alpha", "must be non-negative"));
        }
        if !(e.beta >= 0.0 && e.beta.is_finite()) {
            return Err(ScenarioError::invalid("energy_coeffs.beta", "must be non-negative"));
        }
        Ok(())
    }

    fn check_point(&self, p: &Vec3, field: &str) -> Result<(), ScenarioError> {
        if !finite(p) {
            return Err(ScenarioError::invalid(field, "must be finite"));
        }
        if !self.bounds.contains(p) {
            return Err(ScenarioError::invalid(field, "outside world bounds"));
        }
        if let Some((m, o)) = self
            .obstacles
            .iter()
            .enumerate()
            .find(|(_, o)| o.signed_distance(p) < self.r_safe)
        {
            return Err(ScenarioError::invalid(
                field,
                format!("inside obstacle {m} inflated by r_safe (clearance {:.3})", o.signed_distance(p)),
            ));
        }
        Ok(())
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("scenario serializes")
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<(), ScenarioError> {
        std::fs::write(path, self.to_json())?;
        Ok(())
    }
}

/// Signed clearance: minimum over obstacles of distance to the sphere surface.
/// Returns `f64::MAX` when there are no obstacles.
pub fn clearance(point: &Vec3, scenario: &Scenario) -> f64 {
    clearance_to(point, &scenario.obstacles)
}

pub fn clearance_to(point: &Vec3, obstacles: &[Obstacle]) -> f64 {
    obstacles
        .iter()
        .map(|o| o.signed_distance(point))
        .fold(f64::MAX, f64::min)
}

/// Parses and validates a scenario document.
pub fn load_scenario(text: &str) -> Result<Scenario, ScenarioError> {
    let scenario: Scenario = serde_json::from_str(text)?;
    scenario.validate()?;
    Ok(scenario)
}

pub fn load_scenario_file(path: impl AsRef<Path>) -> Result<Scenario, ScenarioError> {
    load_scenario(&std::fs::read_to_string(path)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn v(x: f64, y: f64, z: f64) -> Vec3 {
        Vec3::new(x, y, z)
    }

    fn world() -> Scenario {
        Scenario::new(
            WorldBounds::new(v(0.0, 0.0, 0.0), v(10.0, 10.0, 10.0)),
            vec![],
            vec![v(1.0, 1.0, 1.0)],
            vec![v(9.0, 9.0, 9.0)],
        )
    }

    #[test]
    fn clearance_examples() {
        let mut s = world();
        s.obstacles.push(Obstacle::new(v(0.0, 0.0, 0.0), 2.0));
        assert_eq!(clearance(&v(5.0, 0.0, 0.0), &s), 3.0);
        assert_eq!(clearance(&v(0.0, 0.0, 0.0), &s), -2.0);
        s.obstacles.push(Obstacle::new(v(7.0, 0.0, 0.0), 1.0));
        assert_eq!(clearance(&v(5.0, 0.0, 0.0), &s), 1.0);
    }

    #[test]
    fn clearance_without_obstacles_is_sentinel() {
        assert_eq!(clearance(&v(1.0, 2.0, 3.0), &world()), f64::MAX);
    }

    #[test]
    fn bounds_are_inclusive() {
        let b = WorldBounds::new(v(0.0, 0.0, 0.0), v(10.0, 10.0, 10.0));
        assert!(inside_bounds(&v(5.0, 5.0, 5.0), &b));
        assert!(inside_bounds(&v(10.0, 10.0, 10.0), &b));
        assert!(!inside_bounds(&v(11.0, 5.0, 5.0), &b));
    }

    #[test]
    fn minimal_document_gets_defaults() {
        let s = load_scenario(
            r#"{"bounds":{"min":[0,0,0],"max":[10,10,10]},"uavs":[{"start":[1,1,1]}],"tasks":[[9,9,9]]}"#,
        )
        .unwrap();
        assert!(s.obstacles.is_empty());
        assert_eq!(s.r_safe, DEFAULT_R_SAFE);
        assert_eq!(s.cruise_speed, DEFAULT_CRUISE_SPEED);
        assert_eq!(s.weights, Weights::default());
        assert_eq!(s.energy_coeffs, EnergyCoeffs::default());
        assert_eq!(s.uavs[0].energy_budget, None);
    }

    #[test]
    fn task_inside_obstacle_is_named() {
        let err = load_scenario(
            r#"{"bounds":{"min":[0,0,0],"max":[10,10,10]},
                "obstacles":[{"center":[5,5,5],"radius":2}],
                "uavs":[{"start":[1,1,1]}],"tasks":[[9,9,9],[5,5,6]]}"#,
        )
        .unwrap_err();
        match err {
            ScenarioError::Invalid { field, .. } => assert_eq!(field, "tasks[1]"),
            other => panic!("unexpected error {other}"),
        }
    }

    #[test]
    fn unknown_keys_are_rejected() {
        let err = load_scenario(
            r#"{"bounds":{"min":[0,0,0],"max":[10,10,10]},"uavs":[{"start":[1,1,1]}],"tasks":[[9,9,9]],"r_saef":2}"#,
        )
        .unwrap_err();
        assert!(matches!(err, ScenarioError::Parse(_)));
        assert!(err.to_string().contains("r_saef"));
    }

    #[test]
    fn malformed_document_is_a_parse_error() {
        assert!(matches!(load_scenario("{\"bounds\": "), Err(ScenarioError::Parse(_))));
    }

    #[test]
    fn validation_catches_bad_fields() {
        let mut s = world();
        s.cruise_speed = 0.0;
        assert!(matches!(s.validate(), Err(ScenarioError::Invalid { field, .. }) if field == "cruise_speed"));
        let mut s = world();
        s.weights.trajectory = [0.0; 5];
        assert!(matches!(s.validate(), Err(ScenarioError::Invalid { field, .. }) if field == "weights.trajectory"));
        let mut s = world();
        s.uavs[0].start = v(-1.0, 0.0, 0.0);
        assert!(matches!(s.validate(), Err(ScenarioError::Invalid { field, .. }) if field == "uavs[0].start"));
        let mut s = world();
        s.tasks.clear();
        assert!(matches!(s.validate(), Err(ScenarioError::Invalid { field, .. }) if field == "tasks"));
    }

    #[test]
    fn save_then_load_round_trips() {
        let mut s = world();
        s.obstacles.push(Obstacle::new(v(5.0, 5.0, 5.0), 1.25));
        s.uavs[0].energy_budget = Some(123.456);
        s.energy_coeffs.beta = 0.3;
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("s.json");
        s.save(&path).unwrap();
        assert_eq!(load_scenario_file(&path).unwrap(), s);
    }

    fn coord() -> impl Strategy<Value = f64> {
        -1.0e3..1.0e3
    }

    proptest! {
        #[test]
        fn clearance_is_one_lipschitz(
            centers in proptest::collection::vec((coord(), coord(), coord(), 0.1f64..50.0), 1..6),
            a in (coord(), coord(), coord()),
            b in (coord(), coord(), coord()),
        ) {
            let obstacles: Vec<Obstacle> =
                centers.iter().map(|&(x, y, z, r)| Obstacle::new(v(x, y, z), r)).collect();
            let (a, b) = (v(a.0, a.1, a.2), v(b.0, b.1, b.2));
            let diff = (clearance_to(&a, &obstacles) - clearance_to(&b, &obstacles)).abs();
            prop_assert!(diff <= (a - b).norm() + 1e-9);
        }

        #[test]
        fn json_round_trip_is_bit_exact(
            x in proptest::num::f64::NORMAL, r in 1e-3f64..1e3, w in 0.0f64..1e6,
        ) {
            let mut s = world();
            s.obstacles.push(Obstacle::new(v(x, -x, x * 0.5), r));
            s.weights.trajectory[3] = w;
            s.uavs[0].energy_budget = Some(w);
            let back: Scenario = serde_json::from_str(&s.to_json()).unwrap();
            prop_assert_eq!(back, s);
        }
    }
}
