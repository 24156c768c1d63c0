//! Swarm-based trajectory planning and task allocation for multi-UAV missions.
//!
//! Trajectories are clamped B-splines whose interior control points are the
//! decision variables of a particle swarm. Optimizers and benchmark functions
//! are looked up by name in registries so the CLI and harness can swap them at
//! runtime.

pub mod allocation;
pub mod bench;
pub mod environment;
pub mod geometry;
pub mod mission;
pub mod objectives;
pub mod planning;
pub mod pso;

pub type Vec3 = nalgebra::Vector3<f64>;
