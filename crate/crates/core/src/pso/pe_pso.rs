use super::entropy::{adapt_params, compute_entropy, select_worst};
use super::swarm::Swarm;
use super::{ConfigError, Fitness, IterationRecord, Optimizer, Params, SearchBounds, SwarmConfig, SwarmState, TrajectoryPool};

/// Persistent-exploration PSO with entropy-adapted coefficients.
///
/// One iteration runs, in order: evaluation, personal/global best update,
/// entropy and coefficient adaptation, the velocity/position update, and
/// reinitialization of the worst `floor(alpha * N)` particles (ranked by the
/// fitness of this iteration's evaluation). Every legal evaluation is offered
/// to the pool as it happens.
///
/// The phases are public so callers can observe intermediate states; [`step`]
/// is the composition.
///
/// [`step`]: Optimizer::step
pub struct PePso {
    swarm: Swarm,
}

impl PePso {
    pub const NAME: &'static str = "pe-pso";

    pub fn new(config: SwarmConfig, bounds: SearchBounds) -> Result<Self, ConfigError> {
        let initial = adapt_params((config.entropy_bins as f64).ln() * 0.5, &config);
        Ok(Self { swarm: Swarm::new(config, bounds, initial)? })
    }

    pub fn config(&self) -> &SwarmConfig {
        &self.swarm.config
    }

    pub fn v_max(&self) -> &[f64] {
        &self.swarm.v_max
    }

    /// Evaluates pending particles and updates personal and global bests.
    /// Returns the fitness of every particle's current position.
    pub fn evaluate(&mut self, fitness: &dyn Fitness) -> Vec<f64> {
        debug_assert_eq!(fitness.dimension(), self.swarm.bounds.dimension());
        self.swarm.evaluate_pending(fitness);
        self.swarm.update_bests();
        self.swarm.current_fitnesses()
    }

    /// Entropy of the finite fitness values and the coefficients it implies.
    pub fn adapt(&mut self, fitnesses: &[f64]) -> Params {
        let finite: Vec<f64> = fitnesses.iter().copied().filter(|f| f.is_finite()).collect();
        let h = compute_entropy(&finite, self.swarm.config.entropy_bins).unwrap_or(0.0);
        self.swarm.state.entropy = h;
        adapt_params(h, &self.swarm.config)
    }

    pub fn advance(&mut self, params: Params) {
        self.swarm.advance(params);
    }

    /// Reinitializes the worst particles by `fitnesses` and returns their
    /// indices.
    pub fn explore(&mut self, fitnesses: &[f64], fitness: &dyn Fitness) -> Vec<usize> {
        let worst = select_worst(fitnesses, self.swarm.config.reset_rate);
        self.swarm.reinitialize(&worst, fitness);
        worst
    }

    pub fn finish_iteration(&mut self) -> IterationRecord {
        let s = &mut self.swarm.state;
        s.iteration += 1;
        IterationRecord {
            iteration: s.iteration,
            gbest_fitness: s.gbest_fitness,
            entropy: s.entropy,
            w: s.params.w,
            c1: s.params.c1,
            c2: s.params.c2,
            pool_size: self.swarm.pool.len(),
        }
    }
}

impl Optimizer for PePso {
    fn name(&self) -> &'static str {
        Self::NAME
    }

    fn state(&self) -> &SwarmState {
        &self.swarm.state
    }

    fn pool(&self) -> &TrajectoryPool {
        &self.swarm.pool
    }

    fn step(&mut self, fitness: &dyn Fitness) -> IterationRecord {
        let fitnesses = self.evaluate(fitness);
        let params = self.adapt(&fitnesses);
        self.advance(params);
        self.explore(&fitnesses, fitness);
        self.finish_iteration()
    }

    fn rebase(&mut self, fitness: &dyn Fitness) {
        self.swarm.rebase(fitness);
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pso::FnFitness;

    fn sphere(x: &[f64]) -> f64 {
        x.iter().map(|v| v * v).sum()
    }

    fn config(seed: u64, n: usize) -> SwarmConfig {
        SwarmConfig { n_particles: n, seed, ..SwarmConfig::default() }
    }

    #[test]
    fn converges_on_two_dimensional_bowl() {
        let f = FnFitness::new(2, sphere);
        let mut o = PePso::new(config(7, 30), SearchBounds::uniform(2, -10.0, 10.0).unwrap()).unwrap();
        for _ in 0..200 {
            o.step(&f);
        }
        assert!(o.state().gbest_fitness < 1e-3, "{}", o.state().gbest_fitness);
    }

    #[test]
    fn gbest_never_increases() {
        let f = FnFitness::new(5, |x: &[f64]| x.iter().map(|v| v * v - 10.0 * (6.28 * v).cos()).sum());
        let mut o = PePso::new(config(3, 40), SearchBounds::uniform(5, -5.0, 5.0).unwrap()).unwrap();
        let mut last = f64::INFINITY;
        for _ in 0..100 {
            let r = o.step(&f);
            assert!(r.gbest_fitness <= last);
            last = r.gbest_fitness;
        }
    }

    #[test]
    fn exactly_the_worst_fraction_moves_during_exploration() {
        let f = FnFitness::new(3, sphere);
        let mut o = PePso::new(config(11, 20), SearchBounds::uniform(3, -1.0, 1.0).unwrap()).unwrap();
        for _ in 0..30 {
            let fit = o.evaluate(&f);
            let p = o.adapt(&fit);
            o.advance(p);
            let before: Vec<Vec<f64>> = o.state().particles.iter().map(|p| p.position.clone()).collect();
            let gbest = o.state().gbest_fitness;
            let worst = o.explore(&fit, &f);
            let moved: Vec<usize> = (0..20).filter(|&i| o.state().particles[i].position != before[i]).collect();
            assert_eq!(moved, worst);
            assert_eq!(moved.len(), 10);
            assert_eq!(o.state().gbest_fitness, gbest);
            for &i in &worst {
                let p = &o.state().particles[i];
                assert_eq!(p.pbest, p.position);
                assert_eq!(Some(p.pbest_fitness), p.fitness);
            }
            o.finish_iteration();
        }
    }

    #[test]
    fn non_finite_fitness_is_treated_as_worst() {
        let f = FnFitness::new(2, |x: &[f64]| if x[0] > 0.0 { f64::NAN } else { sphere(x) });
        let mut o = PePso::new(config(5, 10), SearchBounds::uniform(2, -1.0, 1.0).unwrap()).unwrap();
        for _ in 0..20 {
            o.step(&f);
            assert!(o.state().gbest_fitness.is_finite() || o.state().iteration < 2);
            assert!(o.state().particles.iter().all(|p| !p.pbest_fitness.is_nan()));
        }
        assert!(o.state().gbest[0] <= 0.0);
    }

    #[test]
    fn same_seed_same_trajectory() {
        let f = FnFitness::new(4, sphere);
        let run = || {
            let mut o = PePso::new(config(99, 25), SearchBounds::uniform(4, -3.0, 3.0).unwrap()).unwrap();
            (0..25).map(|_| o.step(&f)).collect::<Vec<_>>()
        };
        assert_eq!(run(), run());
    }
}
