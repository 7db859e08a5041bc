use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::{json, Value};

fn scenario(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../scenarios").join(name)
}

fn syncflow(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_syncflow")).args(args).output().expect("binary runs")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exit code")
}

fn write_scenario(dir: &Path, name: &str, v: &Value) -> PathBuf {
    let p = dir.join(name);
    std::fs::write(&p, serde_json::to_string_pretty(v).unwrap()).unwrap();
    p
}

fn two_node(checks: Value) -> Value {
    json!({
        "version": 1,
        "id": "pair",
        "nodes": [{"kind": "quadratic", "center": [0.0]}, {"kind": "quadratic", "center": [1.0]}],
        "graphs": {"g": [[0, 1, 1.0], [1, 0, 1.0]]},
        "signal": {"kind": "fixed", "graph": "g"},
        "K": 1.0,
        "x0": [0.0, 0.0],
        "dt": 0.01,
        "t_end": 10.0,
        "sample_every": 0.1,
        "checks": checks
    })
}

#[test]
fn simulate_is_byte_for_byte_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a");
    let b = dir.path().join("b");
    let s = scenario("ring_common_zero.json");
    for out in [&a, &b] {
        let res = syncflow(&["simulate", s.to_str().unwrap(), "--out", out.to_str().unwrap()]);
        assert_eq!(code(&res), 0, "{}", String::from_utf8_lossy(&res.stderr));
    }
    for file in ["trajectory.csv", "report.json", "plot.gp"] {
        assert_eq!(std::fs::read(a.join(file)).unwrap(), std::fs::read(b.join(file)).unwrap(), "{file}");
    }
}

#[test]
fn csv_rows_count_grid_plus_off_grid_switches() {
    let dir = tempfile::tempdir().unwrap();
    let v = json!({
        "version": 1,
        "nodes": [{"kind": "quadratic", "center": [0.0]}, {"kind": "quartic", "center": [1.0]}],
        "graphs": {"on": [[0, 1, 1.0], [1, 0, 1.0]], "off": []},
        "signal": {
            "kind": "periodic",
            "segments": [{"graph": "on", "duration": 0.7}, {"graph": "off", "duration": 0.8}],
            "dwell_floor": 0.7
        },
        "K": 2.0,
        "x0": [1.0, -1.0],
        "dt": 0.05,
        "t_end": 4.6,
        "sample_every": 0.5
    });
    let path = write_scenario(dir.path(), "switching.json", &v);
    let out = dir.path().join("out");
    let res = syncflow(&["simulate", path.to_str().unwrap(), "--out", out.to_str().unwrap()]);
    assert_eq!(code(&res), 0, "{}", String::from_utf8_lossy(&res.stderr));

    // switches at 0.7, 1.5, 2.2, 3.0, 3.7, 4.5; of these 1.5, 3.0 and 4.5 lie on the grid
    let grid = (4.6_f64 / 0.5).floor() as usize + 1;
    let switches: Vec<f64> = (1..)
        .map(|k: i32| {
            let periods = (k / 2) as f64 * 1.5;
            if k % 2 == 1 { periods + 0.7 } else { periods }
        })
        .take_while(|t| *t <= 4.6)
        .collect();
    let off_grid = switches.iter().filter(|t| ((*t / 0.5) - (*t / 0.5).round()).abs() > 1e-9).count();
    assert_eq!(off_grid, 3);

    let text = std::fs::read_to_string(out.join("trajectory.csv")).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next().unwrap(), "t,x_0_0,x_1_0,diameter,theta");
    assert_eq!(lines.count(), grid + off_grid);
}

#[test]
fn trajectory_csv_matches_closed_form() {
    // the disagreement of the pair settles at 1 / (1 + 2K)
    let dir = tempfile::tempdir().unwrap();
    let path = write_scenario(dir.path(), "pair.json", &two_node(json!([])));
    let out = dir.path().join("out");
    assert_eq!(code(&syncflow(&["simulate", path.to_str().unwrap(), "--out", out.to_str().unwrap()])), 0);
    let mut rdr = csv::Reader::from_path(out.join("trajectory.csv")).unwrap();
    let last = rdr.records().last().unwrap().unwrap();
    let t: f64 = last[0].parse().unwrap();
    let diameter: f64 = last[3].parse().unwrap();
    assert!((t - 10.0).abs() < 1e-12);
    assert!((diameter - 1.0 / 3.0).abs() < 1e-6, "{diameter}");
}

#[test]
fn verify_exit_codes() {
    let res = syncflow(&["verify", scenario("ring_common_zero.json").to_str().unwrap()]);
    assert_eq!(code(&res), 0);
    let res = syncflow(&["verify", scenario("path_disjoint.json").to_str().unwrap()]);
    assert_eq!(code(&res), 1);
    assert!(String::from_utf8_lossy(&res.stdout).contains("FAIL sync"));
    let res = syncflow(&["verify", "/nonexistent/scenario.json"]);
    assert_eq!(code(&res), 2);
}

#[test]
fn necessity_scenario_fails_and_reports_floor() {
    let res = syncflow(&["verify", "--json", scenario("path_disjoint.json").to_str().unwrap()]);
    assert_eq!(code(&res), 1);
    let report: Value = serde_json::from_slice(&res.stdout).unwrap();
    assert_eq!(report["status"], "check_failure");
    let sync = &report["checks"][0];
    assert_eq!(sync["check"], "sync");
    assert!(sync["worst_value"].as_f64().unwrap() > 1e-3);
}

#[test]
fn invalid_weight_is_an_input_error() {
    let dir = tempfile::tempdir().unwrap();
    let mut v = two_node(json!([]));
    v["graphs"]["g"] = json!([[0, 1, 0.0], [1, 0, 1.0]]);
    let path = write_scenario(dir.path(), "bad.json", &v);
    let res = syncflow(&["verify", path.to_str().unwrap()]);
    assert_eq!(code(&res), 2);
    assert!(String::from_utf8_lossy(&res.stderr).contains("weight below a_*"));
}

#[test]
fn malformed_json_reports_position() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("broken.json");
    std::fs::write(&path, "{\n  \"version\": 1,\n  \"nodes\": [\n    {\"kind\": \"quadratic\", \"center\": [0.0]},\n    {\"kind\": \"cubic\"}\n  ]\n}\n").unwrap();
    let res = syncflow(&["verify", path.to_str().unwrap()]);
    assert_eq!(code(&res), 2);
    let err = String::from_utf8_lossy(&res.stderr);
    assert!(err.contains("nodes[1]") && err.contains("line 5"), "{err}");
}

#[test]
fn divergence_exits_3_and_is_recorded() {
    let dir = tempfile::tempdir().unwrap();
    let v = json!({
        "version": 1,
        "nodes": [{"kind": "quartic", "center": [0.0]}],
        "graphs": {"none": []},
        "signal": {"kind": "fixed", "graph": "none", "dwell_floor": 4.0},
        "K": 1.0,
        "x0": [50.0],
        "dt": 1.0,
        "t_end": 10.0,
        "sample_every": 1.0,
        "checks": [{"name": "sync"}]
    });
    let path = write_scenario(dir.path(), "escape.json", &v);
    let out = dir.path().join("out");
    let res = syncflow(&["simulate", path.to_str().unwrap(), "--out", out.to_str().unwrap()]);
    assert_eq!(code(&res), 3);
    let report: Value = serde_json::from_str(&std::fs::read_to_string(out.join("report.json")).unwrap()).unwrap();
    assert_eq!(report["status"], "numerical_error");
    assert!(report["error"].as_str().unwrap().contains("finite-escape suspected"));
}

#[test]
fn sweep_matches_disagreement_law() {
    let dir = tempfile::tempdir().unwrap();
    let path = write_scenario(dir.path(), "pair.json", &two_node(json!([])));
    let res = syncflow(&[
        "sweep",
        path.to_str().unwrap(),
        "--k",
        "1,2,4,8",
        "--epsilon",
        "0.1",
        "--out",
        dir.path().to_str().unwrap(),
    ]);
    assert_eq!(code(&res), 0, "{}", String::from_utf8_lossy(&res.stdout));
    let mut rdr = csv::Reader::from_path(dir.path().join("sweep.csv")).unwrap();
    assert_eq!(rdr.headers().unwrap(), vec!["K", "epsilon_estimate", "error"]);
    let mut rows = 0;
    for rec in rdr.records() {
        let rec = rec.unwrap();
        let k: f64 = rec[0].parse().unwrap();
        let est: f64 = rec[1].parse().unwrap();
        assert!((est - 1.0 / (1.0 + 2.0 * k)).abs() < 1e-4, "K={k}: {est}");
        rows += 1;
    }
    assert_eq!(rows, 4);

    let res = syncflow(&["sweep", path.to_str().unwrap(), "--k", "1,2", "--epsilon", "0.01", "--out", dir.path().to_str().unwrap()]);
    assert_eq!(code(&res), 1);
    let res = syncflow(&["sweep", path.to_str().unwrap(), "--k", "2,1"]);
    assert_eq!(code(&res), 2);
}

#[test]
fn k_list_scenario_writes_sweep_csv() {
    let dir = tempfile::tempdir().unwrap();
    let res = syncflow(&["simulate", scenario("ring_sweep.json").to_str().unwrap(), "--out", dir.path().to_str().unwrap()]);
    assert_eq!(code(&res), 0);
    let text = std::fs::read_to_string(dir.path().join("sweep.csv")).unwrap();
    assert_eq!(text.lines().count(), 5);
}

#[test]
fn thread_cap_is_validated() {
    let s = scenario("two_node.json");
    let ok = Command::new(env!("CARGO_BIN_EXE_syncflow"))
        .args(["verify", s.to_str().unwrap()])
        .env("SYNCFLOW_THREADS", "1")
        .output()
        .unwrap();
    assert_eq!(code(&ok), 0);
    let bad = Command::new(env!("CARGO_BIN_EXE_syncflow"))
        .args(["verify", s.to_str().unwrap()])
        .env("SYNCFLOW_THREADS", "zero")
        .output()
        .unwrap();
    assert_eq!(code(&bad), 2);
}

#[test]
fn shipped_scenarios_have_expected_outcomes() {
    for (name, expected) in [
        ("two_node.json", 0),
        ("ring_common_zero.json", 0),
        ("ujsc_chains.json", 0),
        ("ring_sweep.json", 0),
        ("path_disjoint.json", 1),
    ] {
        let res = syncflow(&["verify", scenario(name).to_str().unwrap()]);
        assert_eq!(code(&res), expected, "{name}: {}", String::from_utf8_lossy(&res.stdout));
    }
}
