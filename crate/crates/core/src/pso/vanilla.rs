use super::entropy::compute_entropy;
use super::swarm::Swarm;
use super::{ConfigError, Fitness, IterationRecord, Optimizer, Params, SearchBounds, SwarmConfig, SwarmState, TrajectoryPool};

/// Global-best PSO with fixed coefficients. `reset_rate` and the coefficient
/// ranges of the config are ignored; entropy is still tracked for reporting.
pub struct VanillaPso {
    swarm: Swarm,
}

impl VanillaPso {
    pub const NAME: &'static str = "vanilla-pso";
    pub const PARAMS: Params = Params { w: 0.7, c1: 1.5, c2: 1.5 };

    pub fn new(config: SwarmConfig, bounds: SearchBounds) -> Result<Self, ConfigError> {
        Ok(Self { swarm: Swarm::new(config, bounds, Self::PARAMS)? })
    }
}

impl Optimizer for VanillaPso {
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
        self.swarm.evaluate_pending(fitness);
        self.swarm.update_bests();
        let finite: Vec<f64> = self.swarm.current_fitnesses().into_iter().filter(|f| f.is_finite()).collect();
        self.swarm.state.entropy = compute_entropy(&finite, self.swarm.config.entropy_bins).unwrap_or(0.0);
        self.swarm.advance(Self::PARAMS);
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

    fn rebase(&mut self, fitness: &dyn Fitness) {
        self.swarm.rebase(fitness);
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pso::FnFitness;

    #[test]
    fn converges_on_bowl_with_fixed_params() {
        let f = FnFitness::new(3, |x: &[f64]| x.iter().map(|v| v * v).sum());
        let cfg = SwarmConfig { n_particles: 30, seed: 1, ..SwarmConfig::default() };
        let mut o = VanillaPso::new(cfg, SearchBounds::uniform(3, -5.0, 5.0).unwrap()).unwrap();
        for _ in 0..150 {
            let r = o.step(&f);
            assert_eq!((r.w, r.c1, r.c2), (0.7, 1.5, 1.5));
        }
        assert!(o.state().gbest_fitness < 1e-6);
    }
}
