//! Optimizer comparison on analytic benchmark functions.
//!
//! Functions are looked up by name in a [`FunctionRegistry`] and optimizers in
//! an [`OptimizerRegistry`]; [`run_comparison`] runs every
//! `(function, optimizer, seed)` triple in parallel and aggregates the results
//! in a fixed order.

mod functions;
mod stats;

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::sync::Arc;
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use functions::{Ackley, Griewank, Rastrigin, Rosenbrock, Schwefel, Sphere};
pub use stats::{mann_whitney_less, RankTest};

use crate::pso::{ConfigError, Evaluation, Fitness, OptimizerRegistry, SearchBounds, SwarmConfig};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum BenchError {
    #[error("expected a {expected}-dimensional point, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("unknown benchmark function `{name}` (known: {known})")]
    UnknownFunction { name: String, known: String },
    #[error("invalid comparison: {0}")]
    InvalidConfig(String),
    #[error(transparent)]
    Optimizer(#[from] ConfigError),
    #[error("malformed run record on line {line}: {reason}")]
    Parse { line: usize, reason: String },
}

/// An analytic function to be minimized over a symmetric box.
pub trait BenchmarkFunction: Send + Sync {
    fn name(&self) -> &'static str;
    /// Per-coordinate search interval.
    fn bounds(&self) -> (f64, f64);
    fn global_minimum(&self) -> f64 {
        0.0
    }
    fn minimizer(&self, dimension: usize) -> Option<Vec<f64>>;
    /// Unchecked evaluation at a point of any dimension.
    fn value(&self, x: &[f64]) -> f64;
}

/// A benchmark function fixed to a dimension.
#[derive(Clone)]
pub struct Benchmark {
    function: Arc<dyn BenchmarkFunction>,
    dimension: usize,
}

impl Benchmark {
    pub fn new(function: Arc<dyn BenchmarkFunction>, dimension: usize) -> Self {
        Self { function, dimension }
    }

    pub fn function(&self) -> &dyn BenchmarkFunction {
        self.function.as_ref()
    }

    pub fn search_bounds(&self) -> Result<SearchBounds, ConfigError> {
        let (lo, hi) = self.function.bounds();
        SearchBounds::uniform(self.dimension, lo, hi)
    }
}

/// Checked evaluation.
pub fn evaluate_benchmark(bench: &Benchmark, x: &[f64]) -> Result<f64, BenchError> {
    if x.len() != bench.dimension {
        return Err(BenchError::DimensionMismatch { expected: bench.dimension, got: x.len() });
    }
    Ok(bench.function.value(x))
}

impl Fitness for Benchmark {
    fn dimension(&self) -> usize {
        self.dimension
    }

    fn evaluate(&self, x: &[f64]) -> Evaluation {
        Evaluation { fitness: self.function.value(x), legal: true }
    }
}

/// Benchmark functions by name.
#[derive(Clone)]
pub struct FunctionRegistry {
    entries: BTreeMap<&'static str, Arc<dyn BenchmarkFunction>>,
}

impl FunctionRegistry {
    pub fn empty() -> Self {
        Self { entries: BTreeMap::new() }
    }

    pub fn builtin() -> Self {
        let mut r = Self::empty();
        r.register(Arc::new(Sphere));
        r.register(Arc::new(Rosenbrock));
        r.register(Arc::new(Rastrigin));
        r.register(Arc::new(Ackley));
        r.register(Arc::new(Griewank));
        r.register(Arc::new(Schwefel));
        r
    }

    pub fn register(&mut self, f: Arc<dyn BenchmarkFunction>) {
        self.entries.insert(f.name(), f);
    }

    pub fn names(&self) -> Vec<&'static str> {
        self.entries.keys().copied().collect()
    }

    pub fn get(&self, name: &str) -> Result<Arc<dyn BenchmarkFunction>, BenchError> {
        self.entries.get(name).cloned().ok_or_else(|| BenchError::UnknownFunction {
            name: name.to_string(),
            known: self.names().join(", "),
        })
    }
}

impl Default for FunctionRegistry {
    fn default() -> Self {
        Self::builtin()
    }
}

pub const DEFAULT_FUNCTIONS: [&str; 6] = ["sphere", "rosenbrock", "rastrigin", "ackley", "griewank", "schwefel"];

/// What to compare. Seeds are `base_seed, base_seed + 1, ...`, shared by all
/// optimizers so runs are paired.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonConfig {
    pub functions: Vec<String>,
    pub optimizers: Vec<String>,
    pub seeds: usize,
    pub base_seed: u64,
    pub iterations: usize,
    pub dimension: usize,
    /// Swarm settings; `seed` and `parallel` are overridden per run.
    pub swarm: SwarmConfig,
    /// A run reaches the threshold when `best - global_minimum < threshold`.
    pub threshold: f64,
}

impl Default for ComparisonConfig {
    fn default() -> Self {
        Self {
            functions: DEFAULT_FUNCTIONS.iter().map(|s| s.to_string()).collect(),
            optimizers: vec!["pe-pso".into(), "vanilla-pso".into()],
            seeds: 20,
            base_seed: 0,
            iterations: 200,
            dimension: 10,
            swarm: SwarmConfig::default(),
            threshold: 1e-2,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub function: String,
    pub optimizer: String,
    pub seed: u64,
    pub final_fitness: f64,
    pub iterations_to_threshold: Option<usize>,
    pub time_ms: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportRow {
    pub function: String,
    pub optimizer: String,
    pub seeds: usize,
    pub fitness_mean: f64,
    /// Sample standard deviation.
    pub fitness_std: f64,
    pub time_mean_ms: f64,
    /// Mean over the runs that reached the threshold.
    pub iterations_to_threshold_mean: Option<f64>,
    pub reached: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Comparison {
    pub runs: Vec<RunRecord>,
    pub rows: Vec<ReportRow>,
}

impl Comparison {
    /// Final fitness values of one `(function, optimizer)` cell in seed order.
    pub fn finals(&self, function: &str, optimizer: &str) -> Vec<f64> {
        self.runs
            .iter()
            .filter(|r| r.function == function && r.optimizer == optimizer)
            .map(|r| r.final_fitness)
            .collect()
    }
}

fn run_one(
    bench: &Benchmark,
    optimizers: &OptimizerRegistry,
    optimizer: &str,
    swarm: &SwarmConfig,
    iterations: usize,
    threshold: f64,
) -> Result<(f64, Option<usize>, f64), BenchError> {
    let started = Instant::now();
    let mut o = optimizers.create(optimizer, swarm, bench.search_bounds()?)?;
    let target = bench.function().global_minimum() + threshold;
    let mut reached = None;
    for i in 1..=iterations {
        let r = o.step(bench);
        if reached.is_none() && r.gbest_fitness < target {
            reached = Some(i);
        }
    }
    Ok((o.state().gbest_fitness, reached, started.elapsed().as_secs_f64() * 1e3))
}

/// Runs every `(function, optimizer, seed)` combination. Runs are independent
/// and execute in parallel; each swarm evaluates serially.
pub fn run_comparison(
    config: &ComparisonConfig,
    functions: &FunctionRegistry,
    optimizers: &OptimizerRegistry,
) -> Result<Comparison, BenchError> {
    if config.seeds < 2 {
        return Err(BenchError::InvalidConfig(format!("need at least 2 seeds, got {}", config.seeds)));
    }
    if config.functions.is_empty() || config.optimizers.is_empty() || config.dimension == 0 {
        return Err(BenchError::InvalidConfig("need at least one function, one optimizer and dimension >= 1".into()));
    }
    let mut jobs = Vec::new();
    for f in &config.functions {
        let bench = Benchmark::new(functions.get(f)?, config.dimension);
        for o in &config.optimizers {
            if !optimizers.contains(o) {
                return Err(ConfigError::UnknownOptimizer { name: o.clone(), known: optimizers.names().collect::<Vec<_>>().join(", ") }.into());
            }
            for s in 0..config.seeds as u64 {
                jobs.push((bench.clone(), f.clone(), o.clone(), config.base_seed + s));
            }
        }
    }
    let runs = jobs
        .par_iter()
        .map(|(bench, f, o, seed)| {
            let swarm = SwarmConfig { seed: *seed, parallel: false, ..config.swarm.clone() };
            let (final_fitness, iterations_to_threshold, time_ms) =
                run_one(bench, optimizers, o, &swarm, config.iterations, config.threshold)?;
            Ok(RunRecord { function: f.clone(), optimizer: o.clone(), seed: *seed, final_fitness, iterations_to_threshold, time_ms })
        })
        .collect::<Result<Vec<_>, BenchError>>()?;
    let rows = summarize(&runs);
    Ok(Comparison { runs, rows })
}

/// Aggregates per-run records into one row per `(function, optimizer)`, in
/// order of first appearance.
pub fn summarize(runs: &[RunRecord]) -> Vec<ReportRow> {
    let mut keys: Vec<(&str, &str)> = Vec::new();
    for r in runs {
        let k = (r.function.as_str(), r.optimizer.as_str());
        if !keys.contains(&k) {
            keys.push(k);
        }
    }
    keys.into_iter()
        .map(|(f, o)| {
            let cell: Vec<&RunRecord> = runs.iter().filter(|r| r.function == f && r.optimizer == o).collect();
            let n = cell.len() as f64;
            let mean = cell.iter().map(|r| r.final_fitness).sum::<f64>() / n;
            let var = if cell.len() > 1 {
                cell.iter().map(|r| (r.final_fitness - mean).powi(2)).sum::<f64>() / (n - 1.0)
            } else {
                0.0
            };
            let hits: Vec<usize> = cell.iter().filter_map(|r| r.iterations_to_threshold).collect();
            ReportRow {
                function: f.to_string(),
                optimizer: o.to_string(),
                seeds: cell.len(),
                fitness_mean: mean,
                fitness_std: var.sqrt(),
                time_mean_ms: cell.iter().map(|r| r.time_ms).sum::<f64>() / n,
                iterations_to_threshold_mean: (!hits.is_empty()).then(|| hits.iter().sum::<usize>() as f64 / hits.len() as f64),
                reached: hits.len(),
            }
        })
        .collect()
}

pub fn report_csv(rows: &[ReportRow]) -> String {
    let mut s = String::from("function,optimizer,seeds,fitness_mean,fitness_std,time_mean_ms\n");
    for r in rows {
        let _ = writeln!(s, "{},{},{},{},{},{}", r.function, r.optimizer, r.seeds, r.fitness_mean, r.fitness_std, r.time_mean_ms);
    }
    s
}

pub fn runs_csv(runs: &[RunRecord]) -> String {
    let mut s = String::from("function,optimizer,seed,final_fitness,iterations_to_threshold,time_ms\n");
    for r in runs {
        let hit = r.iterations_to_threshold.map(|i| i.to_string()).unwrap_or_default();
        let _ = writeln!(s, "{},{},{},{},{hit},{}", r.function, r.optimizer, r.seed, r.final_fitness, r.time_ms);
    }
    s
}

/// Parses the output of [`runs_csv`].
pub fn parse_runs_csv(text: &str) -> Result<Vec<RunRecord>, BenchError> {
    text.lines()
        .enumerate()
        .skip(1)
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, line)| {
            let err = |reason: &str| BenchError::Parse { line: i + 1, reason: reason.to_string() };
            let cols: Vec<&str> = line.split(',').collect();
            if cols.len() != 6 {
                return Err(err("expected 6 columns"));
            }
            let num = |s: &str| s.parse::<f64>().map_err(|_| err("bad number"));
            Ok(RunRecord {
                function: cols[0].to_string(),
                optimizer: cols[1].to_string(),
                seed: cols[2].parse().map_err(|_| err("bad seed"))?,
                final_fitness: num(cols[3])?,
                iterations_to_threshold: match cols[4] {
                    "" => None,
                    s => Some(s.parse().map_err(|_| err("bad iteration count"))?),
                },
                time_ms: num(cols[5])?,
            })
        })
        .collect()
}

/// Fixed-width table for terminals.
pub fn format_table(rows: &[ReportRow]) -> String {
    let mut s = format!(
        "{:<12} {:<12} {:>5} {:>13} {:>13} {:>10} {:>12}\n",
        "function", "optimizer", "seeds", "mean", "std", "time ms", "iters<thr"
    );
    for r in rows {
        let hit = match r.iterations_to_threshold_mean {
            Some(m) => format!("{m:.1} ({}/{})", r.reached, r.seeds),
            None => format!("- (0/{})", r.seeds),
        };
        let _ = writeln!(
            s,
            "{:<12} {:<12} {:>5} {:>13.6e} {:>13.6e} {:>10.2} {:>12}",
            r.function, r.optimizer, r.seeds, r.fitness_mean, r.fitness_std, r.time_mean_ms, hit
        );
    }
    s
}
