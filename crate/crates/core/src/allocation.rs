//! Task allocation: which UAV visits which tasks, and in what order.
//!
//! The genetic solver encodes an assignment as a permutation of all tasks plus
//! `K - 1` sorted split points that cut the permutation into one open tour per
//! UAV. [`brute_force_allocation`] enumerates the same encoding exhaustively
//! for small instances and serves as the optimality oracle.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::environment::Scenario;
use crate::objectives::{allocation_cost, AllocationCost, CostError};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum AllocationError {
    #[error("invalid allocation configuration: {0}")]
    InvalidConfig(String),
    #[error("instance with {n_tasks} tasks and {n_uavs} UAVs exceeds the exhaustive search limit ({max_tasks} tasks, {max_uavs} UAVs)")]
    Refused { n_tasks: usize, n_uavs: usize, max_tasks: usize, max_uavs: usize },
    #[error(transparent)]
    Cost(#[from] CostError),
}

/// Ordered task-index tour for each UAV.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Assignment {
    tours: Vec<Vec<usize>>,
}

impl Assignment {
    pub fn new(tours: Vec<Vec<usize>>) -> Self {
        Self { tours }
    }

    pub fn tours(&self) -> &[Vec<usize>] {
        &self.tours
    }

    pub fn n_uavs(&self) -> usize {
        self.tours.len()
    }

    /// True when every task `0..n_tasks` appears exactly once.
    pub fn covers(&self, n_tasks: usize) -> bool {
        let mut seen = vec![false; n_tasks];
        for &t in self.tours.iter().flatten() {
            match seen.get_mut(t) {
                Some(s) if !*s => *s = true,
                _ => return false,
            }
        }
        seen.into_iter().all(|s| s)
    }
}

fn default_population() -> usize {
    50
}
fn default_generations() -> usize {
    200
}
fn default_crossover() -> f64 {
    0.9
}
fn default_mutation() -> f64 {
    0.2
}
fn default_elitism() -> usize {
    2
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GaConfig {
    #[serde(default = "default_population")]
    pub population: usize,
    #[serde(default = "default_generations")]
    pub generations: usize,
    #[serde(default = "default_crossover")]
    pub crossover_rate: f64,
    #[serde(default = "default_mutation")]
    pub mutation_rate: f64,
    #[serde(default = "default_elitism")]
    pub elitism: usize,
    #[serde(default)]
    pub seed: u64,
}

impl Default for GaConfig {
    fn default() -> Self {
        Self {
            population: default_population(),
            generations: default_generations(),
            crossover_rate: default_crossover(),
            mutation_rate: default_mutation(),
            elitism: default_elitism(),
            seed: 0,
        }
    }
}

impl GaConfig {
    pub fn validate(&self) -> Result<(), AllocationError> {
        let bad = |m: &str| Err(AllocationError::InvalidConfig(m.to_string()));
        if self.population < 2 {
            return bad("population must be at least 2");
        }
        if !(0.0..=1.0).contains(&self.crossover_rate) || !(0.0..=1.0).contains(&self.mutation_rate) {
            return bad("rates must lie in [0, 1]");
        }
        if self.elitism >= self.population {
            return bad("elitism must be smaller than the population");
        }
        Ok(())
    }
}

/// Solver output: the best assignment, its cost, and the best cost after
/// initialization and after every generation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Allocation {
    pub assignment: Assignment,
    pub cost: AllocationCost,
    pub best_per_generation: Vec<f64>,
}

/// Permutation of all tasks plus sorted split points in `0..=N`.
#[derive(Debug, Clone, PartialEq)]
struct Chromosome {
    order: Vec<usize>,
    splits: Vec<usize>,
}

impl Chromosome {
    fn random(rng: &mut ChaCha8Rng, n_tasks: usize, n_uavs: usize) -> Self {
        let mut order: Vec<usize> = (0..n_tasks).collect();
        order.shuffle(rng);
        let mut splits: Vec<usize> = (0..n_uavs - 1).map(|_| rng.random_range(0..=n_tasks)).collect();
        splits.sort_unstable();
        Self { order, splits }
    }

    fn decode(&self) -> Assignment {
        decode(&self.order, &self.splits)
    }
}

fn decode(order: &[usize], splits: &[usize]) -> Assignment {
    let mut tours = Vec::with_capacity(splits.len() + 1);
    let mut from = 0;
    for &s in splits.iter().chain(std::iter::once(&order.len())) {
        tours.push(order[from..s].to_vec());
        from = s;
    }
    Assignment::new(tours)
}

/// Order crossover on the permutation; split points are taken from either
/// parent and re-sorted.
fn crossover(rng: &mut ChaCha8Rng, a: &Chromosome, b: &Chromosome) -> Chromosome {
    let n = a.order.len();
    let (mut i, mut j) = (rng.random_range(0..n), rng.random_range(0..n));
    if i > j {
        std::mem::swap(&mut i, &mut j);
    }
    let mut child = vec![usize::MAX; n];
    let mut used = vec![false; n];
    for k in i..=j {
        child[k] = a.order[k];
        used[a.order[k]] = true;
    }
    let mut fill = b.order.iter().filter(|t| !used[**t]);
    for slot in child.iter_mut().filter(|c| **c == usize::MAX) {
        *slot = *fill.next().expect("permutations have equal length");
    }
    let mut splits: Vec<usize> = a
        .splits
        .iter()
        .zip(&b.splits)
        .map(|(x, y)| if rng.random::<bool>() { *x } else { *y })
        .collect();
    splits.sort_unstable();
    Chromosome { order: child, splits }
}

/// Swap mutation on the permutation and a +-1 shift of one split point.
fn mutate(rng: &mut ChaCha8Rng, c: &mut Chromosome, rate: f64) {
    let n = c.order.len();
    if n >= 2 && rng.random::<f64>() < rate {
        let (i, j) = (rng.random_range(0..n), rng.random_range(0..n));
        c.order.swap(i, j);
    }
    if !c.splits.is_empty() && rng.random::<f64>() < rate {
        let k = rng.random_range(0..c.splits.len());
        let s = c.splits[k];
        c.splits[k] = if rng.random::<bool>() { (s + 1).min(n) } else { s.saturating_sub(1) };
        c.splits.sort_unstable();
    }
}

fn tournament(rng: &mut ChaCha8Rng, costs: &[f64]) -> usize {
    (0..3)
        .map(|_| rng.random_range(0..costs.len()))
        .min_by(|&a, &b| costs[a].total_cmp(&costs[b]).then(a.cmp(&b)))
        .expect("tournament of size 3")
}

fn check_instance(scenario: &Scenario) -> Result<(), AllocationError> {
    if scenario.n_tasks() < 1 || scenario.n_uavs() < 1 {
        return Err(AllocationError::InvalidConfig("need at least one task and one UAV".into()));
    }
    Ok(())
}

/// Genetic search minimizing the weighted allocation cost. Deterministic for
/// a given seed.
pub fn solve_allocation(scenario: &Scenario, config: &GaConfig) -> Result<Allocation, AllocationError> {
    check_instance(scenario)?;
    config.validate()?;
    let (n, k) = (scenario.n_tasks(), scenario.n_uavs());
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let cost_of = |c: &Chromosome| allocation_cost(&c.decode(), scenario).map(|c| c.total);

    let mut population: Vec<Chromosome> = (0..config.population).map(|_| Chromosome::random(&mut rng, n, k)).collect();
    let mut costs = population.iter().map(cost_of).collect::<Result<Vec<_>, _>>()?;
    let mut best = argmin(&costs);
    let mut best_chromosome = population[best].clone();
    let mut best_cost = costs[best];
    let mut history = vec![best_cost];

    for _ in 0..config.generations {
        let mut ranked: Vec<usize> = (0..population.len()).collect();
        ranked.sort_by(|&a, &b| costs[a].total_cmp(&costs[b]).then(a.cmp(&b)));
        let mut next: Vec<Chromosome> = ranked.iter().take(config.elitism).map(|&i| population[i].clone()).collect();
        while next.len() < config.population {
            let a = tournament(&mut rng, &costs);
            let b = tournament(&mut rng, &costs);
            let mut child = if rng.random::<f64>() < config.crossover_rate {
                crossover(&mut rng, &population[a], &population[b])
            } else {
                population[a].clone()
            };
            mutate(&mut rng, &mut child, config.mutation_rate);
            next.push(child);
        }
        population = next;
        costs = population.iter().map(cost_of).collect::<Result<Vec<_>, _>>()?;
        best = argmin(&costs);
        if costs[best] < best_cost {
            best_cost = costs[best];
            best_chromosome = population[best].clone();
        }
        history.push(best_cost);
    }

    let assignment = best_chromosome.decode();
    let cost = allocation_cost(&assignment, scenario)?;
    Ok(Allocation { assignment, cost, best_per_generation: history })
}

fn argmin(costs: &[f64]) -> usize {
    (0..costs.len())
        .min_by(|&a, &b| costs[a].total_cmp(&costs[b]).then(a.cmp(&b)))
        .expect("non-empty population")
}

/// Size guard for [`brute_force_allocation`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct OracleLimit {
    pub max_tasks: usize,
    pub max_uavs: usize,
}

impl Default for OracleLimit {
    fn default() -> Self {
        Self { max_tasks: 7, max_uavs: 3 }
    }
}

/// Exhaustive optimum and the number of distinct candidates examined.
#[derive(Debug, Clone, PartialEq)]
pub struct OracleResult {
    pub assignment: Assignment,
    pub cost: AllocationCost,
    pub candidates: usize,
}

/// Enumerates every ordered tour set (`N! * C(N + K - 1, K - 1)` candidates)
/// and returns the cheapest, first found on ties. Refuses instances above the
/// limit instead of approximating.
pub fn brute_force_allocation(scenario: &Scenario, limit: OracleLimit) -> Result<OracleResult, AllocationError> {
    check_instance(scenario)?;
    let (n, k) = (scenario.n_tasks(), scenario.n_uavs());
    if n > limit.max_tasks || k > limit.max_uavs {
        return Err(AllocationError::Refused { n_tasks: n, n_uavs: k, max_tasks: limit.max_tasks, max_uavs: limit.max_uavs });
    }
    let split_sets = nondecreasing_sequences(k - 1, n);
    let mut order: Vec<usize> = (0..n).collect();
    let mut best: Option<(Assignment, f64)> = None;
    let mut candidates = 0;
    loop {
        for splits in &split_sets {
            let a = decode(&order, splits);
            let c = allocation_cost(&a, scenario)?.total;
            candidates += 1;
            if best.as_ref().is_none_or(|(_, b)| c < *b) {
                best = Some((a, c));
            }
        }
        if !next_permutation(&mut order) {
            break;
        }
    }
    let (assignment, _) = best.expect("at least one candidate");
    let cost = allocation_cost(&assignment, scenario)?;
    Ok(OracleResult { assignment, cost, candidates })
}

/// All nondecreasing sequences of `len` values in `0..=max`.
fn nondecreasing_sequences(len: usize, max: usize) -> Vec<Vec<usize>> {
    fn rec(len: usize, lo: usize, max: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == len {
            out.push(cur.clone());
            return;
        }
        for v in lo..=max {
            cur.push(v);
            rec(len, v, max, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    rec(len, 0, max, &mut Vec::with_capacity(len), &mut out);
    out
}

/// Lexicographic next permutation; false after the last one.
fn next_permutation(v: &mut [usize]) -> bool {
    if v.len() < 2 {
        return false;
    }
    let Some(i) = (0..v.len() - 1).rev().find(|&i| v[i] < v[i + 1]) else {
        return false;
    };
    let j = (i + 1..v.len()).rev().find(|&j| v[j] > v[i]).expect("successor exists");
    v.swap(i, j);
    v[i + 1..].reverse();
    true
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::environment::WorldBounds;
    use crate::Vec3;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    fn v(x: f64, y: f64, z: f64) -> Vec3 {
        Vec3::new(x, y, z)
    }

    fn scenario(starts: Vec<Vec3>, tasks: Vec<Vec3>) -> Scenario {
        Scenario::new(WorldBounds::new(v(-50.0, -50.0, -50.0), v(50.0, 50.0, 50.0)), vec![], starts, tasks)
    }

    /// Independent oracle: label every task with a UAV, then try every order of
    /// every tour.
    fn enumerate_by_labels(s: &Scenario) -> (f64, usize) {
        let (n, k) = (s.n_tasks(), s.n_uavs());
        let mut best = f64::INFINITY;
        let mut count = 0;
        for code in 0..k.pow(n as u32) {
            let mut groups = vec![Vec::new(); k];
            let mut c = code;
            for t in 0..n {
                groups[c % k].push(t);
                c /= k;
            }
            fn orders(g: &[usize]) -> Vec<Vec<usize>> {
                if g.is_empty() {
                    return vec![vec![]];
                }
                let mut out = Vec::new();
                for i in 0..g.len() {
                    let mut rest = g.to_vec();
                    let head = rest.remove(i);
                    for mut tail in orders(&rest) {
                        tail.insert(0, head);
                        out.push(tail);
                    }
                }
                out
            }
            let per_uav: Vec<Vec<Vec<usize>>> = groups.iter().map(|g| orders(g)).collect();
            let mut idx = vec![0; k];
            loop {
                let tours: Vec<Vec<usize>> = (0..k).map(|u| per_uav[u][idx[u]].clone()).collect();
                best = best.min(allocation_cost(&Assignment::new(tours), s).unwrap().total);
                count += 1;
                let mut u = 0;
                while u < k {
                    idx[u] += 1;
                    if idx[u] < per_uav[u].len() {
                        break;
                    }
                    idx[u] = 0;
                    u += 1;
                }
                if u == k {
                    break;
                }
            }
        }
        (best, count)
    }

    #[test]
    fn single_uav_collinear_tasks_near_to_far() {
        let s = scenario(vec![v(0.0, 0.0, 0.0)], vec![v(6.0, 0.0, 0.0), v(2.0, 0.0, 0.0), v(4.0, 0.0, 0.0)]);
        let oracle = brute_force_allocation(&s, OracleLimit::default()).unwrap();
        assert_eq!(oracle.assignment.tours(), &[vec![1, 2, 0]]);
        assert_eq!(oracle.candidates, 6);
        let ga = solve_allocation(&s, &GaConfig { seed: 4, ..GaConfig::default() }).unwrap();
        assert_eq!(ga.assignment, oracle.assignment);
        assert_abs_diff_eq!(ga.cost.total_distance, 6.0, epsilon = 1e-12);
    }

    #[test]
    fn symmetric_pair_each_takes_nearer_task() {
        let s = scenario(vec![v(-5.0, 0.0, 0.0), v(5.0, 0.0, 0.0)], vec![v(6.0, 3.0, 0.0), v(-6.0, 3.0, 0.0)]);
        let expected = vec![vec![1], vec![0]];
        assert_eq!(brute_force_allocation(&s, OracleLimit::default()).unwrap().assignment.tours(), &expected);
        let ga = solve_allocation(&s, &GaConfig { seed: 9, ..GaConfig::default() }).unwrap();
        assert_eq!(ga.assignment.tours(), &expected);
    }

    #[test]
    fn zero_generations_returns_valid_initial_best() {
        let s = scenario(vec![v(0.0, 0.0, 0.0), v(1.0, 1.0, 0.0)], (0..5).map(|i| v(i as f64, 2.0, 0.0)).collect());
        let a = solve_allocation(&s, &GaConfig { generations: 0, ..GaConfig::default() }).unwrap();
        assert!(a.assignment.covers(5));
        assert_eq!(a.assignment.n_uavs(), 2);
        assert_eq!(a.best_per_generation.len(), 1);
    }

    #[test]
    fn oracle_single_task() {
        let s = scenario(vec![v(0.0, 0.0, 0.0)], vec![v(1.0, 0.0, 0.0)]);
        let r = brute_force_allocation(&s, OracleLimit::default()).unwrap();
        assert_eq!(r.assignment.tours(), &[vec![0]]);
        assert_eq!(r.candidates, 1);
    }

    #[test]
    fn oracle_two_opposite_tasks() {
        // 3 then back through the start to 4 is 3 + 7; 4 first is 4 + 7
        let s = scenario(vec![v(0.0, 0.0, 0.0)], vec![v(-3.0, 0.0, 0.0), v(4.0, 0.0, 0.0)]);
        let r = brute_force_allocation(&s, OracleLimit::default()).unwrap();
        assert_eq!(r.assignment.tours(), &[vec![0, 1]]);
        assert_abs_diff_eq!(r.cost.total_distance, 10.0, epsilon = 1e-12);
    }

    #[test]
    fn oracle_two_uavs_three_tasks_matches_label_enumeration() {
        let s = scenario(
            vec![v(0.0, 0.0, 0.0), v(10.0, 0.0, 0.0)],
            vec![v(1.0, 5.0, 0.0), v(9.0, 4.0, 0.0), v(5.0, -3.0, 1.0)],
        );
        let r = brute_force_allocation(&s, OracleLimit::default()).unwrap();
        let (best, count) = enumerate_by_labels(&s);
        // 8 labelings; per labeling the product of tour-order counts: 6+6+2*3+2*3 = 24
        assert_eq!(r.candidates, 24);
        assert_eq!(count, 24);
        assert_abs_diff_eq!(r.cost.total, best, epsilon = 1e-12);
    }

    #[test]
    fn oracle_refuses_large_instances() {
        let s = scenario(vec![v(0.0, 0.0, 0.0)], (0..8).map(|i| v(i as f64, 0.0, 0.0)).collect());
        assert!(matches!(brute_force_allocation(&s, OracleLimit::default()), Err(AllocationError::Refused { .. })));
        let s = scenario(vec![v(0.0, 0.0, 0.0); 4], vec![v(1.0, 0.0, 0.0)]);
        assert!(matches!(brute_force_allocation(&s, OracleLimit::default()), Err(AllocationError::Refused { .. })));
    }

    #[test]
    fn more_uavs_than_tasks_allows_empty_tours() {
        let s = scenario(vec![v(0.0, 0.0, 0.0), v(5.0, 0.0, 0.0), v(9.0, 0.0, 0.0)], vec![v(5.0, 1.0, 0.0)]);
        let a = solve_allocation(&s, &GaConfig::default()).unwrap();
        assert_eq!(a.assignment.tours(), &[vec![], vec![0], vec![]]);
    }

    #[test]
    fn invalid_ga_config_is_rejected() {
        let s = scenario(vec![v(0.0, 0.0, 0.0)], vec![v(1.0, 0.0, 0.0)]);
        for c in [
            GaConfig { population: 1, ..GaConfig::default() },
            GaConfig { elitism: 50, ..GaConfig::default() },
            GaConfig { mutation_rate: 1.5, ..GaConfig::default() },
        ] {
            assert!(matches!(solve_allocation(&s, &c), Err(AllocationError::InvalidConfig(_))));
        }
    }

    #[test]
    fn ga_is_deterministic_and_elitist() {
        let s = scenario(
            vec![v(0.0, 0.0, 0.0), v(20.0, 0.0, 0.0)],
            (0..6).map(|i| v((i * 7 % 13) as f64, (i * 5 % 11) as f64, 0.0)).collect(),
        );
        let c = GaConfig { seed: 17, generations: 60, ..GaConfig::default() };
        let a = solve_allocation(&s, &c).unwrap();
        assert_eq!(a, solve_allocation(&s, &c).unwrap());
        assert!(a.best_per_generation.windows(2).all(|w| w[1] <= w[0]));
        let oracle = brute_force_allocation(&s, OracleLimit::default()).unwrap();
        assert!(a.cost.total >= oracle.cost.total - 1e-9);
    }

    #[test]
    fn permutation_enumeration_counts() {
        let mut v = vec![0, 1, 2, 3];
        let mut n = 1;
        while next_permutation(&mut v) {
            n += 1;
        }
        assert_eq!(n, 24);
        assert_eq!(nondecreasing_sequences(2, 3).len(), 10);
        assert_eq!(nondecreasing_sequences(0, 3), vec![Vec::<usize>::new()]);
    }

    proptest! {
        #[test]
        fn genetic_operators_keep_chromosomes_decodable(seed in any::<u64>(), n in 1usize..9, k in 1usize..4, rate in 0.0f64..1.0) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let a = Chromosome::random(&mut rng, n, k);
            let b = Chromosome::random(&mut rng, n, k);
            let mut c = crossover(&mut rng, &a, &b);
            mutate(&mut rng, &mut c, rate);
            for x in [&a, &b, &c] {
                let d = x.decode();
                prop_assert!(d.covers(n));
                prop_assert_eq!(d.n_uavs(), k);
            }
        }
    }
}
