use std::path::Path;
use std::process::{Command, Output};

use dvdw_cli::output::{read_csv_table, read_trajectory_csv, trajectory_csv};
use dvdw_cli::{run_cli, RunConfig};

fn dvdw(args: &[&str], out: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_dvdw"))
        .args(args)
        .env("DVDW_OUTPUT_DIR", out)
        .output()
        .unwrap()
}

fn run(args: &[&str], out: &Path) -> i32 {
    let dir = format!("--output-dir={}", out.display());
    let mut argv = vec!["dvdw"];
    argv.extend_from_slice(args);
    argv.push(&dir);
    run_cli(argv)
}

const SHORT: [&str; 5] = ["simulate", "--t-end", "2e-3", "--dt", "1e-4"];

#[test]
fn verify_example_passes() {
    let d = tempfile::tempdir().unwrap();
    let o = dvdw(&["verify", "--n-modes", "64", "--seed", "1"], d.path());
    let text = String::from_utf8_lossy(&o.stdout);
    assert_eq!(o.status.code(), Some(0), "{text}");
    assert!(text.lines().filter(|l| l.starts_with("PASS")).count() >= 10);
    assert!(!text.contains("FAIL"));
    assert!(d.path().join("verify.json").exists());
}

#[test]
fn invalid_epsilon_exits_1_naming_the_bound() {
    let d = tempfile::tempdir().unwrap();
    let o = dvdw(&["simulate", "--epsilon", "1.5"], d.path());
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("epsilon must lie in (0, 1)"));
}

#[test]
fn usage_errors_exit_1() {
    let d = tempfile::tempdir().unwrap();
    assert_eq!(dvdw(&["simulate", "--bogus", "1"], d.path()).status.code(), Some(1));
    assert_eq!(dvdw(&["nonsense"], d.path()).status.code(), Some(1));
    assert_eq!(dvdw(&["simulate", "--set", "bogus=1"], d.path()).status.code(), Some(1));
    assert_eq!(dvdw(&["simulate", "--dt", "x"], d.path()).status.code(), Some(1));
    assert_eq!(dvdw(&["--help"], d.path()).status.code(), Some(0));
    let o = dvdw(&["simulate", "--config", "/nonexistent/cfg"], d.path());
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("cannot read config"));
}

#[test]
fn theorem_mode_checks_alpha() {
    let d = tempfile::tempdir().unwrap();
    let bad = ["simulate", "--pressure", "p2", "--alpha", "0.5", "--theorem-mode"];
    assert_eq!(run(&bad, d.path()), 1);
    assert_eq!(run(&["simulate", "--system", "modified", "--pressure", "p1"], d.path()), 1);
    let mut ok = SHORT.to_vec();
    ok.extend(["--pressure", "p2", "--alpha", "0.25", "--theorem-mode"]);
    assert_eq!(run(&ok, d.path()), 0);
}

#[test]
fn sweep_example_writes_rows_and_slope_line() {
    let d = tempfile::tempdir().unwrap();
    let args = [
        "sweep", "--pressure", "p0", "--alpha", "0", "--epsilons", "0.2,0.1,0.05,0.025",
        "--t-end-coeff", "5", "--jobs", "2",
    ];
    assert_eq!(run(&args, d.path()), 0);
    let (header, rows, comments) =
        read_csv_table(&std::fs::read(d.path().join("sweep.csv")).unwrap()).unwrap();
    assert_eq!(header[0], "epsilon");
    assert_eq!(rows.len(), 4);
    assert_eq!(comments.len(), 1);
    assert_eq!(comments[0].0, "slope");
}

#[test]
fn simulate_is_deterministic_and_round_trips() {
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    assert_eq!(run(&SHORT, a.path()), 0);
    assert_eq!(run(&SHORT, b.path()), 0);
    let ca = std::fs::read(a.path().join("simulate.csv")).unwrap();
    let cb = std::fs::read(b.path().join("simulate.csv")).unwrap();
    assert_eq!(ca, cb);
    let rows = read_trajectory_csv(&ca).unwrap();
    assert_eq!(rows.len(), 21);
    assert_eq!(rows.last().unwrap().status, "completed");
    assert_eq!(trajectory_csv(&rows), ca);
    let manifest: serde_json::Value =
        serde_json::from_slice(&std::fs::read(a.path().join("simulate.json")).unwrap()).unwrap();
    assert_eq!(manifest["status"], "completed");
    assert_eq!(manifest["version"], env!("CARGO_PKG_VERSION"));
    assert!(manifest["wall_time_s"].as_f64().unwrap() >= 0.0);
    assert_eq!(manifest["config"]["epsilon"], 0.1);
}

#[test]
fn flags_override_config_file() {
    let d = tempfile::tempdir().unwrap();
    let cfg = d.path().join("run.conf");
    std::fs::write(&cfg, "epsilon = 0.2\nseed = 4\nname = fromfile\nt_end = 2e-3\n").unwrap();
    let c = cfg.to_str().unwrap();
    assert_eq!(run(&["simulate", "--config", c, "--epsilon", "0.3"], d.path()), 0);
    let m: serde_json::Value =
        serde_json::from_slice(&std::fs::read(d.path().join("fromfile.json")).unwrap()).unwrap();
    assert_eq!(m["config"]["epsilon"], 0.3);
    assert_eq!(m["config"]["seed"], 4);
}

#[test]
fn output_dir_defaults_to_environment() {
    let d = tempfile::tempdir().unwrap();
    let o = dvdw(&SHORT, d.path());
    assert_eq!(o.status.code(), Some(0));
    assert!(d.path().join("simulate.csv").exists());
}

#[test]
fn other_subcommands_succeed() {
    let d = tempfile::tempdir().unwrap();
    assert_eq!(run(&["growth", "--ks", "1,2"], d.path()), 0);
    let (_, rows, _) = read_csv_table(&std::fs::read(d.path().join("growth.csv")).unwrap()).unwrap();
    assert_eq!(rows.len(), 2);
    assert_eq!(run(&["continue", "--epsilon", "0.01", "--alpha", "0.5"], d.path()), 0);
    let s: serde_json::Value =
        serde_json::from_slice(&std::fs::read(d.path().join("continue.json")).unwrap()).unwrap();
    assert_eq!(s["result"]["j_star"], 11);
    assert_eq!(run(&["picard", "--n-modes", "8"], d.path()), 0);
    let p: serde_json::Value =
        serde_json::from_slice(&std::fs::read(d.path().join("picard.json")).unwrap()).unwrap();
    assert!(p["result"]["stepper_discrepancy"].as_f64().unwrap() < 1e-7);
}

#[test]
fn unconverged_picard_exits_2() {
    let d = tempfile::tempdir().unwrap();
    assert_eq!(run(&["picard", "--n-modes", "8", "--max-iter", "1"], d.path()), 2);
}

#[test]
fn shipped_schema_matches_defaults() {
    let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("config-schema.conf");
    let cfg = RunConfig::from_file(&path).unwrap().unwrap();
    assert_eq!(cfg, RunConfig::default());
    let text = std::fs::read_to_string(&path).unwrap();
    for key in RunConfig::KEYS {
        assert!(text.contains(&format!("{key} =")), "schema lacks {key}");
    }
}
