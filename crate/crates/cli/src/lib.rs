//! Command implementations behind the `swarmplan` binary.
//!
//! Every command writes `manifest.json` into its output directory before doing
//! any work, and writes nothing outside that directory.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use thiserror::Error;

use swarmplan::allocation::{brute_force_allocation, solve_allocation, AllocationError, GaConfig, OracleLimit};
use swarmplan::bench::{
    format_table, mann_whitney_less, report_csv, run_comparison, runs_csv, ComparisonConfig, FunctionRegistry, DEFAULT_FUNCTIONS,
};
use swarmplan::environment::{load_scenario_file, Scenario};
use swarmplan::mission::{run_mission, write_run_directory, BudgetMode, MissionConfig, MissionError, ScheduledEvent};
use swarmplan::objectives::Leg;
use swarmplan::planning::{LegProblem, PathEncoding, Planner};
use swarmplan::pso::{OptimizerRegistry, SwarmConfig};

pub const EXIT_OK: u8 = 0;
pub const EXIT_CONFIG: u8 = 1;
pub const EXIT_EMPTY_POOL: u8 = 2;
pub const EXIT_ORACLE_REFUSED: u8 = 3;
pub const EXIT_MISSION: u8 = 4;

const SCHEMA_HELP: &str = "\
Scenario files are JSON:
  {
    \"bounds\":    {\"min\": [x, y, z], \"max\": [x, y, z]},
    \"obstacles\": [{\"center\": [x, y, z], \"radius\": r}, ...],
    \"uavs\":      [{\"start\": [x, y, z], \"energy_budget\": e?}, ...],
    \"tasks\":     [[x, y, z], ...],
    \"r_safe\": 1.0, \"cruise_speed\": 2.0,
    \"weights\": {\"trajectory\": [w1..w5], \"allocation\": [w1, w2, w3]},
    \"energy_coeffs\": {\"alpha\": 1.0, \"beta\": 0.1}
  }
Only bounds, uavs and tasks are required. Mission configs wrap a scenario
(inline object or a path relative to the config file) with optional
swarm, ga, encoding, optimizer, budget_mode, replan_iterations, t_max,
events, sim_step and max_sim_time fields.

Exit codes: 0 success, 1 configuration error, 2 empty trajectory pool,
3 oracle refused the instance, 4 mission failure.
Set SWARMPLAN_THREADS to cap worker threads (0 = automatic).";

#[derive(Debug, Parser)]
#[command(name = "swarmplan", version, about = "Swarm trajectory planning and task allocation for UAV teams", after_long_help = SCHEMA_HELP)]
pub struct Cli {
    #[command(flatten)]
    pub global: GlobalArgs,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args)]
pub struct GlobalArgs {
    /// Seed for every random stream.
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,
    /// Directory that receives all outputs.
    #[arg(long, global = true, default_value = "out")]
    pub out_dir: PathBuf,
    /// Optimizer iterations (per replan for missions).
    #[arg(long, global = true)]
    pub iterations: Option<usize>,
    /// Samples per trajectory.
    #[arg(long, global = true)]
    pub samples: Option<usize>,
    /// Suppress the summary on standard output.
    #[arg(long, global = true)]
    pub quiet: bool,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Plan one leg from a UAV's start to a task.
    Plan {
        scenario: PathBuf,
        /// UAV whose start position begins the leg.
        #[arg(long, default_value_t = 0)]
        uav: usize,
        /// Task index of the goal.
        #[arg(long, default_value_t = 0)]
        task: usize,
        #[arg(long, default_value = "pe-pso")]
        optimizer: String,
    },
    /// Assign tasks to UAVs with the genetic solver.
    Allocate {
        scenario: PathBuf,
        /// Cross-check against exhaustive search and report the gap.
        #[arg(long)]
        oracle: bool,
        #[arg(long)]
        generations: Option<usize>,
        #[arg(long)]
        population: Option<usize>,
    },
    /// Run a full mission simulation.
    Mission {
        config: PathBuf,
        #[arg(long, value_enum)]
        budget_mode: Option<BudgetArg>,
        /// JSON list of scheduled events, replacing those in the config.
        #[arg(long)]
        events: Option<PathBuf>,
        /// Wall-clock seconds per replan in wallclock mode.
        #[arg(long)]
        t_max: Option<f64>,
    },
    /// Compare optimizers on benchmark functions.
    Bench {
        /// Comma-separated function names.
        #[arg(long, value_delimiter = ',')]
        functions: Option<Vec<String>>,
        /// Comma-separated optimizer names.
        #[arg(long, value_delimiter = ',', default_value = "pe-pso,vanilla-pso")]
        optimizers: Vec<String>,
        /// Number of seeds per cell (at least 2).
        #[arg(long, default_value_t = 20)]
        seeds: usize,
        #[arg(long, default_value_t = 10)]
        dimension: usize,
    },
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum BudgetArg {
    Iterations,
    Wallclock,
}

#[derive(Debug, Error)]
#[error("{message}")]
pub struct CliError {
    pub code: u8,
    pub message: String,
}

impl CliError {
    fn config(message: impl std::fmt::Display) -> Self {
        Self { code: EXIT_CONFIG, message: message.to_string() }
    }
}

#[derive(Debug, Serialize)]
pub struct RunManifest {
    pub command: String,
    pub config_paths: Vec<PathBuf>,
    pub seed: u64,
    pub tool_version: String,
    pub started_at_unix: u64,
    pub out_dir: PathBuf,
}

/// Applies `SWARMPLAN_THREADS` to the global thread pool.
pub fn configure_threads() -> Result<(), CliError> {
    let Ok(v) = std::env::var("SWARMPLAN_THREADS") else {
        return Ok(());
    };
    let n: usize = v.trim().parse().map_err(|_| CliError::config(format!("SWARMPLAN_THREADS must be a count, got `{v}`")))?;
    if n > 0 {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| CliError::config(format!("cannot configure threads: {e}")))?;
    }
    Ok(())
}

fn write(dir: &Path, name: &str, text: &str) -> Result<(), CliError> {
    let path = dir.join(name);
    fs::write(&path, text).map_err(|e| CliError::config(format!("cannot write {}: {e}", path.display())))
}

fn to_json(value: &impl Serialize) -> String {
    serde_json::to_string_pretty(value).expect("outputs serialize") + "\n"
}

fn start_run(global: &GlobalArgs, command: &str, config_paths: Vec<PathBuf>) -> Result<(), CliError> {
    fs::create_dir_all(&global.out_dir)
        .map_err(|e| CliError::config(format!("cannot create {}: {e}", global.out_dir.display())))?;
    let manifest = RunManifest {
        command: command.into(),
        config_paths,
        seed: global.seed,
        tool_version: env!("CARGO_PKG_VERSION").into(),
        started_at_unix: SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0),
        out_dir: global.out_dir.clone(),
    };
    write(&global.out_dir, "manifest.json", &to_json(&manifest))
}

fn load_scenario(path: &Path) -> Result<Scenario, CliError> {
    let s = load_scenario_file(path).map_err(|e| CliError::config(format!("{}: {e}", path.display())))?;
    s.validate().map_err(|e| CliError::config(format!("{}: {e}", path.display())))?;
    Ok(s)
}

fn encoding(global: &GlobalArgs) -> PathEncoding {
    let mut e = PathEncoding::default();
    if let Some(n) = global.samples {
        e.samples = n;
    }
    e
}

pub fn run(cli: Cli) -> Result<(), CliError> {
    let g = &cli.global;
    match &cli.command {
        Command::Plan { scenario, uav, task, optimizer } => cmd_plan(g, scenario, *uav, *task, optimizer),
        Command::Allocate { scenario, oracle, generations, population } => cmd_allocate(g, scenario, *oracle, *generations, *population),
        Command::Mission { config, budget_mode, events, t_max } => cmd_mission(g, config, *budget_mode, events.as_deref(), *t_max),
        Command::Bench { functions, optimizers, seeds, dimension } => cmd_bench(g, functions.as_deref(), optimizers, *seeds, *dimension),
    }
}

pub fn cmd_plan(g: &GlobalArgs, scenario_path: &Path, uav: usize, task: usize, optimizer: &str) -> Result<(), CliError> {
    start_run(g, "plan", vec![scenario_path.to_path_buf()])?;
    let scenario = load_scenario(scenario_path)?;
    let start = scenario.uavs.get(uav).ok_or_else(|| CliError::config(format!("uav {uav} does not exist")))?.start;
    let goal = *scenario.tasks.get(task).ok_or_else(|| CliError::config(format!("task {task} does not exist")))?;
    let iterations = g.iterations.unwrap_or(200);
    let problem = LegProblem::new(scenario, Leg::new(start, goal), encoding(g)).map_err(CliError::config)?;
    let swarm = SwarmConfig { seed: g.seed, ..SwarmConfig::default() };
    let mut planner = Planner::with_optimizer(&OptimizerRegistry::builtin(), optimizer, &swarm, problem).map_err(CliError::config)?;

    let mut conv = String::from("iteration,gbest_fitness,entropy,w,c1,c2,pool_size\n");
    planner.replan_observed(iterations, |r| {
        let _ = writeln!(conv, "{},{},{},{},{},{},{}", r.iteration, r.gbest_fitness, r.entropy, r.w, r.c1, r.c2, r.pool_size);
    });
    write(&g.out_dir, "convergence.csv", &conv)?;
    let Some(best) = planner.best() else {
        return Err(CliError { code: EXIT_EMPTY_POOL, message: format!("no legal trajectory after {iterations} iterations") });
    };
    let mut csv = String::from("u,x,y,z\n");
    for (u, p) in best.path.params().iter().zip(best.path.points()) {
        let _ = writeln!(csv, "{u},{},{},{}", p.x, p.y, p.z);
    }
    write(&g.out_dir, "trajectory.csv", &csv)?;
    let report = serde_json::json!({
        "uav": uav,
        "task": task,
        "optimizer": optimizer,
        "iterations": iterations,
        "legal": best.legal,
        "cost": best.cost,
        "control_points": best.trajectory.control_points(),
    });
    write(&g.out_dir, "cost.json", &to_json(&report))?;
    if !g.quiet {
        println!("legal trajectory for uav {uav} -> task {task}: cost {:.4} (distance {:.3})", best.cost.total, best.cost.distance);
    }
    Ok(())
}

pub fn cmd_allocate(
    g: &GlobalArgs,
    scenario_path: &Path,
    oracle: bool,
    generations: Option<usize>,
    population: Option<usize>,
) -> Result<(), CliError> {
    start_run(g, "allocate", vec![scenario_path.to_path_buf()])?;
    let scenario = load_scenario(scenario_path)?;
    let mut ga = GaConfig { seed: g.seed, ..GaConfig::default() };
    if let Some(n) = generations.or(g.iterations) {
        ga.generations = n;
    }
    if let Some(n) = population {
        ga.population = n;
    }
    let result = solve_allocation(&scenario, &ga).map_err(CliError::config)?;
    let mut out = serde_json::json!({
        "seed": g.seed,
        "ga": ga,
        "assignment": result.assignment,
        "cost": result.cost,
    });
    if oracle {
        let best = brute_force_allocation(&scenario, OracleLimit::default()).map_err(|e| match e {
            AllocationError::Refused { .. } => CliError { code: EXIT_ORACLE_REFUSED, message: e.to_string() },
            e => CliError::config(e),
        })?;
        out["oracle"] = serde_json::json!({
            "assignment": best.assignment,
            "cost": best.cost,
            "candidates": best.candidates,
            "gap": result.cost.total - best.cost.total,
        });
    }
    write(&g.out_dir, "assignment.json", &to_json(&out))?;
    if !g.quiet {
        println!("assignment {:?}: cost {:.4}", result.assignment.tours(), result.cost.total);
        if let Some(gap) = out.get("oracle").and_then(|o| o["gap"].as_f64()) {
            println!("gap to exhaustive optimum: {gap:.6}");
        }
    }
    Ok(())
}

/// Reads a mission config; a string `scenario` field names a scenario file
/// relative to the config.
pub fn load_mission_config(path: &Path) -> Result<MissionConfig, CliError> {
    let text = fs::read_to_string(path).map_err(|e| CliError::config(format!("{}: {e}", path.display())))?;
    let mut value: serde_json::Value =
        serde_json::from_str(&text).map_err(|e| CliError::config(format!("{}: {e}", path.display())))?;
    if let Some(rel) = value.get("scenario").and_then(|s| s.as_str()) {
        let scenario_path = path.parent().unwrap_or(Path::new(".")).join(rel);
        let scenario = load_scenario_file(&scenario_path).map_err(|e| CliError::config(format!("{}: {e}", scenario_path.display())))?;
        value["scenario"] = serde_json::to_value(scenario).expect("scenario serializes");
    }
    serde_json::from_value(value).map_err(|e| CliError::config(format!("{}: {e}", path.display())))
}

pub fn cmd_mission(
    g: &GlobalArgs,
    config_path: &Path,
    budget: Option<BudgetArg>,
    events: Option<&Path>,
    t_max: Option<f64>,
) -> Result<(), CliError> {
    let mut paths = vec![config_path.to_path_buf()];
    paths.extend(events.map(Path::to_path_buf));
    start_run(g, "mission", paths)?;
    let mut config = load_mission_config(config_path)?.with_seed(g.seed);
    if let Some(path) = events {
        let text = fs::read_to_string(path).map_err(|e| CliError::config(format!("{}: {e}", path.display())))?;
        config.events = serde_json::from_str::<Vec<ScheduledEvent>>(&text)
            .map_err(|e| CliError::config(format!("{}: {e}", path.display())))?;
    }
    if let Some(b) = budget {
        config.budget_mode = match b {
            BudgetArg::Iterations => BudgetMode::Iterations,
            BudgetArg::Wallclock => BudgetMode::Wallclock,
        };
    }
    if let Some(n) = g.iterations {
        config.replan_iterations = n;
    }
    if let Some(t) = t_max {
        config.t_max = t;
    }
    if let Some(n) = g.samples {
        config.encoding.samples = n;
    }
    config.validate().map_err(CliError::config)?;

    let log = run_mission(&config).map_err(|e| match e {
        MissionError::InvalidConfig(_) | MissionError::Scenario(_) => CliError::config(e),
        e => CliError { code: EXIT_MISSION, message: e.to_string() },
    })?;
    write_run_directory(&config, &log, &g.out_dir).map_err(|e| CliError::config(e))?;
    if !g.quiet {
        println!(
            "mission {} at t = {:.1} s: {} tasks visited, {} trajectories accepted, {} replans ({} stalls)",
            if log.complete { "complete" } else { "incomplete" },
            log.final_time,
            log.visits.iter().map(Vec::len).sum::<usize>(),
            log.accepted.len(),
            log.replans.len(),
            log.stalls(),
        );
    }
    if !log.complete {
        return Err(CliError { code: EXIT_MISSION, message: format!("mission did not finish within {} s", config.max_sim_time) });
    }
    Ok(())
}

pub fn cmd_bench(g: &GlobalArgs, functions: Option<&[String]>, optimizers: &[String], seeds: usize, dimension: usize) -> Result<(), CliError> {
    start_run(g, "bench", Vec::new())?;
    if seeds < 2 {
        return Err(CliError::config(format!("--seeds must be at least 2, got {seeds}")));
    }
    let config = ComparisonConfig {
        functions: functions.map(<[String]>::to_vec).unwrap_or_else(|| DEFAULT_FUNCTIONS.iter().map(|s| s.to_string()).collect()),
        optimizers: optimizers.to_vec(),
        seeds,
        base_seed: g.seed,
        iterations: g.iterations.unwrap_or(200),
        dimension,
        ..ComparisonConfig::default()
    };
    let result = run_comparison(&config, &FunctionRegistry::builtin(), &OptimizerRegistry::builtin()).map_err(CliError::config)?;
    write(&g.out_dir, "bench_report.csv", &report_csv(&result.rows))?;
    write(&g.out_dir, "bench_runs.csv", &runs_csv(&result.runs))?;
    if !g.quiet {
        print!("{}", format_table(&result.rows));
        if config.optimizers.iter().any(|o| o == "pe-pso") && config.optimizers.iter().any(|o| o == "vanilla-pso") {
            for f in &config.functions {
                if let Some(t) = mann_whitney_less(&result.finals(f, "pe-pso"), &result.finals(f, "vanilla-pso")) {
                    println!("{f}: pe-pso < vanilla-pso one-sided rank test p = {:.4}", t.p_value);
                }
            }
        }
    }
    Ok(())
}
