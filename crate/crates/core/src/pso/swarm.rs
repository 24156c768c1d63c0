//! State and update rules shared by the swarm strategies.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::{ConfigError, Evaluation, Fitness, Params, Particle, SearchBounds, SwarmConfig, SwarmState, TrajectoryPool};

pub(crate) struct Swarm {
    pub config: SwarmConfig,
    pub bounds: SearchBounds,
    pub v_max: Vec<f64>,
    pub state: SwarmState,
    pub pool: TrajectoryPool,
    rng: ChaCha8Rng,
}

fn sanitize(e: Evaluation) -> Evaluation {
    if e.fitness.is_finite() {
        e
    } else {
        Evaluation { fitness: f64::INFINITY, legal: false }
    }
}

impl Swarm {
    pub fn new(config: SwarmConfig, bounds: SearchBounds, initial: Params) -> Result<Self, ConfigError> {
        config.validate()?;
        let v_max: Vec<f64> = bounds
            .lower
            .iter()
            .zip(&bounds.upper)
            .map(|(l, u)| config.v_max_fraction * (u - l))
            .collect();
        let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
        let particles = (0..config.n_particles)
            .map(|_| {
                let (position, velocity) = draw(&mut rng, &bounds, &v_max);
                Particle { pbest: position.clone(), position, velocity, pbest_fitness: f64::INFINITY, fitness: None }
            })
            .collect::<Vec<_>>();
        let gbest = particles[0].position.clone();
        let pool = TrajectoryPool::new(config.pool_capacity);
        Ok(Self {
            state: SwarmState {
                particles,
                gbest,
                gbest_fitness: f64::INFINITY,
                entropy: 0.0,
                params: initial,
                iteration: 0,
            },
            config,
            bounds,
            v_max,
            pool,
            rng,
        })
    }

    fn evaluate_all(&self, fitness: &dyn Fitness, positions: &[&[f64]]) -> Vec<Evaluation> {
        if self.config.parallel {
            positions.par_iter().map(|x| sanitize(fitness.evaluate(x))).collect()
        } else {
            positions.iter().map(|x| sanitize(fitness.evaluate(x))).collect()
        }
    }

    /// Evaluates every particle whose current position has no fitness yet and
    /// offers legal results to the pool.
    pub fn evaluate_pending(&mut self, fitness: &dyn Fitness) {
        let pending: Vec<usize> = (0..self.state.particles.len())
            .filter(|&i| self.state.particles[i].fitness.is_none())
            .collect();
        let positions: Vec<&[f64]> = pending.iter().map(|&i| self.state.particles[i].position.as_slice()).collect();
        let results = self.evaluate_all(fitness, &positions);
        for (&i, e) in pending.iter().zip(results) {
            let p = &mut self.state.particles[i];
            p.fitness = Some(e.fitness);
            self.pool.insert(&p.position, e.fitness, e.legal);
        }
    }

    /// Personal bests from current fitness, then the global best.
    pub fn update_bests(&mut self) {
        for p in &mut self.state.particles {
            if let Some(f) = p.fitness {
                if f < p.pbest_fitness {
                    p.pbest_fitness = f;
                    p.pbest.clone_from(&p.position);
                }
            }
        }
        for p in &self.state.particles {
            if p.pbest_fitness < self.state.gbest_fitness {
                self.state.gbest_fitness = p.pbest_fitness;
                self.state.gbest.clone_from(&p.pbest);
            }
        }
    }

    pub fn current_fitnesses(&self) -> Vec<f64> {
        self.state
            .particles
            .iter()
            .map(|p| p.fitness.unwrap_or(f64::INFINITY))
            .collect()
    }

    /// `v = w v + c1 r1 (pbest - x) + c2 r2 (gbest - x)`, `x = x + v`, with
    /// fresh `r1, r2` per component. Velocities are clamped to `V_max`;
    /// positions are clamped to the box and the clamped velocity component
    /// zeroed.
    pub fn advance(&mut self, params: Params) {
        let Params { w, c1, c2 } = params;
        let gbest = &self.state.gbest;
        for p in &mut self.state.particles {
            for d in 0..p.position.len() {
                let r1: f64 = self.rng.random();
                let r2: f64 = self.rng.random();
                let x = p.position[d];
                let v = w * p.velocity[d] + c1 * r1 * (p.pbest[d] - x) + c2 * r2 * (gbest[d] - x);
                let mut v = v.clamp(-self.v_max[d], self.v_max[d]);
                let mut x = x + v;
                let (lo, hi) = (self.bounds.lower[d], self.bounds.upper[d]);
                if x < lo {
                    x = lo;
                    v = 0.0;
                } else if x > hi {
                    x = hi;
                    v = 0.0;
                }
                p.position[d] = x;
                p.velocity[d] = v;
            }
            p.fitness = None;
        }
        self.state.params = params;
    }

    /// Fresh uniform positions and velocities for `indices`; their personal
    /// bests are reset to the new position and its evaluation. The global best
    /// is left alone.
    pub fn reinitialize(&mut self, indices: &[usize], fitness: &dyn Fitness) {
        for &i in indices {
            let (x, v) = draw(&mut self.rng, &self.bounds, &self.v_max);
            let p = &mut self.state.particles[i];
            p.position = x;
            p.velocity = v;
        }
        let positions: Vec<&[f64]> = indices.iter().map(|&i| self.state.particles[i].position.as_slice()).collect();
        let results = self.evaluate_all(fitness, &positions);
        for (&i, e) in indices.iter().zip(results) {
            let p = &mut self.state.particles[i];
            p.fitness = Some(e.fitness);
            p.pbest.clone_from(&p.position);
            p.pbest_fitness = e.fitness;
            self.pool.insert(&p.position, e.fitness, e.legal);
        }
    }

    pub fn rebase(&mut self, fitness: &dyn Fitness) {
        self.pool.clear();
        let pbests: Vec<&[f64]> = self.state.particles.iter().map(|p| p.pbest.as_slice()).collect();
        let results = self.evaluate_all(fitness, &pbests);
        for (p, e) in self.state.particles.iter_mut().zip(results) {
            p.pbest_fitness = e.fitness;
            p.fitness = None;
            self.pool.insert(&p.pbest, e.fitness, e.legal);
        }
        self.state.gbest_fitness = f64::INFINITY;
        self.evaluate_pending(fitness);
        self.update_bests();
    }
}

fn draw(rng: &mut ChaCha8Rng, bounds: &SearchBounds, v_max: &[f64]) -> (Vec<f64>, Vec<f64>) {
    let x = bounds
        .lower
        .iter()
        .zip(&bounds.upper)
        .map(|(l, u)| l + (u - l) * rng.random::<f64>())
        .collect();
    let v = v_max.iter().map(|m| m * (2.0 * rng.random::<f64>() - 1.0)).collect();
    (x, v)
}
