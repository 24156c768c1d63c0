use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};
use std::time::{Duration, Instant};

fn scenarios() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../scenarios")
}

fn swarmplan(out: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_swarmplan"))
        .arg("--out-dir")
        .arg(out)
        .args(args)
        .env_remove("SWARMPLAN_THREADS")
        .output()
        .expect("binary runs")
}

fn fig2() -> String {
    scenarios().join("fig2.json").display().to_string()
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exit code")
}

#[test]
fn plan_writes_trajectory_and_cost() {
    let dir = tempfile::tempdir().unwrap();
    let o = swarmplan(dir.path(), &["plan", &fig2(), "--uav", "0", "--task", "3", "--iterations", "60"]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    for f in ["manifest.json", "trajectory.csv", "convergence.csv", "cost.json"] {
        assert!(dir.path().join(f).is_file(), "{f} missing");
    }
    let traj = fs::read_to_string(dir.path().join("trajectory.csv")).unwrap();
    assert_eq!(traj.lines().next(), Some("u,x,y,z"));
    assert_eq!(traj.lines().count(), 51);
    let conv = fs::read_to_string(dir.path().join("convergence.csv")).unwrap();
    assert_eq!(conv.lines().count(), 61);
    let cost: serde_json::Value = serde_json::from_str(&fs::read_to_string(dir.path().join("cost.json")).unwrap()).unwrap();
    assert_eq!(cost["legal"], true);
}

#[test]
fn plan_with_no_budget_reports_empty_pool() {
    let dir = tempfile::tempdir().unwrap();
    let o = swarmplan(dir.path(), &["plan", &fig2(), "--iterations", "0"]);
    assert_eq!(code(&o), 2);
    assert!(dir.path().join("manifest.json").is_file());
}

#[test]
fn invalid_scenario_names_the_field() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.json");
    fs::write(
        &bad,
        r#"{"bounds":{"min":[0,0,0],"max":[10,10,10]},"uavs":[{"start":[1,1,1]}],"tasks":[[5,5,5]],"cruise_speed":-1}"#,
    )
    .unwrap();
    let o = swarmplan(&dir.path().join("out"), &["plan", bad.to_str().unwrap()]);
    assert_eq!(code(&o), 1);
    assert!(String::from_utf8_lossy(&o.stderr).contains("cruise_speed"));
}

#[test]
fn allocate_is_deterministic_and_matches_oracle() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    for d in [&a, &b] {
        let o = swarmplan(d.path(), &["allocate", &fig2(), "--oracle", "--seed", "5"]);
        assert_eq!(code(&o), 0);
    }
    let ja = fs::read(a.path().join("assignment.json")).unwrap();
    assert_eq!(ja, fs::read(b.path().join("assignment.json")).unwrap());
    let v: serde_json::Value = serde_json::from_slice(&ja).unwrap();
    assert!(v["oracle"]["gap"].as_f64().unwrap() >= -1e-9);
}

#[test]
fn oracle_refuses_large_instances() {
    let dir = tempfile::tempdir().unwrap();
    let tasks: Vec<String> = (0..9).map(|i| format!("[{},{},5]", 10 + 8 * i, 50)).collect();
    let text = format!(
        r#"{{"bounds":{{"min":[0,0,0],"max":[100,100,30]}},"uavs":[{{"start":[5,5,5]}},{{"start":[5,95,5]}}],"tasks":[{}]}}"#,
        tasks.join(",")
    );
    let path = dir.path().join("big.json");
    fs::write(&path, text).unwrap();
    let o = swarmplan(&dir.path().join("out"), &["allocate", path.to_str().unwrap(), "--oracle"]);
    assert_eq!(code(&o), 3);
}

#[test]
fn mission_writes_run_directory() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = scenarios().join("mission_fig2.json");
    let events = scenarios().join("fig2_events.json");
    let o = swarmplan(
        dir.path(),
        &["mission", cfg.to_str().unwrap(), "--events", events.to_str().unwrap(), "--budget-mode", "iterations", "--iterations", "40"],
    );
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    for f in ["manifest.json", "mission.json", "latency.csv", "timing.csv", "convergence.csv", "uav_1_executed.csv"] {
        assert!(dir.path().join(f).is_file(), "{f} missing");
    }
    let log: serde_json::Value = serde_json::from_str(&fs::read_to_string(dir.path().join("mission.json")).unwrap()).unwrap();
    assert_eq!(log["complete"], true);
    assert_eq!(log["events"].as_array().unwrap().len(), 2);
}

#[test]
fn mission_rejects_unknown_config_fields() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("m.json");
    fs::write(&cfg, format!(r#"{{"scenario":"{}","replan_budget":3}}"#, fig2())).unwrap();
    let o = swarmplan(&dir.path().join("out"), &["mission", cfg.to_str().unwrap()]);
    assert_eq!(code(&o), 1);
}

#[test]
fn bench_needs_two_seeds() {
    let dir = tempfile::tempdir().unwrap();
    let o = swarmplan(dir.path(), &["bench", "--seeds", "1"]);
    assert_eq!(code(&o), 1);
    assert!(!dir.path().join("bench_report.csv").exists());
}

#[test]
fn bench_defaults_finish_quickly() {
    let dir = tempfile::tempdir().unwrap();
    let t = Instant::now();
    let o = swarmplan(dir.path(), &["bench"]);
    assert!(t.elapsed() < Duration::from_secs(300));
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let report = fs::read_to_string(dir.path().join("bench_report.csv")).unwrap();
    assert_eq!(report.lines().count(), 1 + 6 * 2);
    let runs = fs::read_to_string(dir.path().join("bench_runs.csv")).unwrap();
    assert_eq!(runs.lines().count(), 1 + 6 * 2 * 20);
    let stdout = String::from_utf8_lossy(&o.stdout);
    assert!(stdout.contains("rank test"));
}

#[test]
fn thread_override_must_be_numeric() {
    let dir = tempfile::tempdir().unwrap();
    let o = Command::new(env!("CARGO_BIN_EXE_swarmplan"))
        .arg("--out-dir")
        .arg(dir.path())
        .args(["allocate", &fig2()])
        .env("SWARMPLAN_THREADS", "many")
        .output()
        .unwrap();
    assert_eq!(code(&o), 1);
}

#[test]
fn help_documents_schema() {
    let o = Command::new(env!("CARGO_BIN_EXE_swarmplan")).arg("--help").output().unwrap();
    let text = String::from_utf8_lossy(&o.stdout);
    assert!(text.contains("obstacles") && text.contains("Exit codes"));
}
