use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn lemp(args: &[&str], cwd: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_lemp"))
        .args(args)
        .current_dir(cwd)
        .env_remove("LEMP_OUT_DIR")
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn two_state_scenario(global: [[f64; 2]; 2]) -> String {
    let local = r#"{"transitions": [[0.5, 0.5], [0.5, 0.5]], "rewards": [1.0, 2.0]}"#;
    format!(
        r#"{{"name": "custom", "global": [[{}, {}], [{}, {}]], "arms": [[{local}, {local}], [{local}, {local}]]}}"#,
        global[0][0], global[0][1], global[1][0], global[1][1]
    )
}

#[test]
fn scenarios_list_and_show_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let list = lemp(&["scenarios", "list"], dir.path());
    assert!(list.status.success());
    let text = stdout(&list);
    for name in ["s1-base", "s2-sixarms", "s3-threestates", "s4-smallgap"] {
        assert!(text.contains(name), "{text}");
        let shown = lemp(&["scenarios", "show", name], dir.path());
        assert!(shown.status.success());
        let path = dir.path().join(format!("{name}.json"));
        std::fs::write(&path, stdout(&shown)).unwrap();
        let again = lemp(&["scenarios", "show", path.to_str().unwrap()], dir.path());
        assert_eq!(stdout(&again), stdout(&shown));
    }
}

#[test]
fn validate_prints_the_global_stationary_law() {
    let dir = tempfile::tempdir().unwrap();
    let out = lemp(&["validate", "s1-base"], dir.path());
    assert!(out.status.success(), "{}", stderr(&out));
    assert!(stdout(&out).contains("pi_global = (0.5556, 0.4444)"), "{}", stdout(&out));
}

#[test]
fn invalid_scenarios_exit_with_code_two() {
    let dir = tempfile::tempdir().unwrap();
    let cases = [
        ([[0.4, 0.5], [0.75, 0.25]], "RowNotStochastic"),
        ([[1.0, 0.0], [0.5, 0.5]], "Reducible"),
    ];
    for (global, needle) in cases {
        let path = dir.path().join("bad.json");
        std::fs::write(&path, two_state_scenario(global)).unwrap();
        let out = lemp(&["validate", path.to_str().unwrap()], dir.path());
        assert_eq!(out.status.code(), Some(2));
        assert!(stderr(&out).contains(needle), "{}", stderr(&out));
    }
    let missing = lemp(&["run", "--scenario", "no-such-scenario", "--runs", "1"], dir.path());
    assert_eq!(missing.status.code(), Some(2));
}

#[test]
fn bound_reports_constants_and_grows_with_t() {
    let dir = tempfile::tempdir().unwrap();
    let out = lemp(&["bound", "--scenario", "s1-base", "--t", "10,100,1000"], dir.path());
    assert!(out.status.success(), "{}", stderr(&out));
    let doc: Value = serde_json::from_str(&stdout(&out)).unwrap();
    assert_eq!(doc["x_max"].as_f64(), Some(14.0));
    assert!((doc["delta"].as_f64().unwrap() - 0.16).abs() < 1e-12);
    let values: Vec<f64> = doc["report"]["bound"]
        .as_array()
        .unwrap()
        .iter()
        .map(|p| p["value"].as_f64().unwrap())
        .collect();
    assert_eq!(values.len(), 3);
    assert!(values.windows(2).all(|w| w[0] < w[1]), "{values:?}");
}

#[test]
fn run_writes_one_block_of_rows_per_policy() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("out.csv");
    let json = dir.path().join("out.json");
    let out = lemp(
        &[
            "run", "--scenario", "s1-base", "--horizon", "5000", "--runs", "3", "--seed", "11",
            "--out", csv.to_str().unwrap(), "--json", json.to_str().unwrap(), "--bound",
        ],
        dir.path(),
    );
    assert!(out.status.success(), "{}", stderr(&out));
    let text = std::fs::read_to_string(&csv).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("policy,t,mean_regret,std_regret,ci95,mean_regret_over_lnt"));
    let rows: Vec<&str> = lines.collect();
    assert_eq!(rows.len(), 4 * 64);
    for (k, policy) in ["lemp", "dsee", "avg-best", "genie"].iter().enumerate() {
        let block = &rows[k * 64..(k + 1) * 64];
        assert!(block.iter().all(|r| r.starts_with(&format!("{policy},"))));
        assert!(block.last().unwrap().starts_with(&format!("{policy},5000,")));
    }
    let report: Value = serde_json::from_str(&std::fs::read_to_string(&json).unwrap()).unwrap();
    assert_eq!(report["seeds"].as_array().unwrap().len(), 3);
    assert!(report["bound"].is_object());
}

#[test]
fn default_output_goes_to_the_configured_directory() {
    let dir = tempfile::tempdir().unwrap();
    let status = Command::new(env!("CARGO_BIN_EXE_lemp"))
        .args(["run", "--scenario", "s4-smallgap", "--horizon", "300", "--runs", "1"])
        .env("LEMP_OUT_DIR", dir.path())
        .output()
        .unwrap()
        .status;
    assert!(status.success());
    assert!(dir.path().join("regret.csv").exists());
}

#[test]
fn bad_flags_exit_with_code_two() {
    let dir = tempfile::tempdir().unwrap();
    for args in [
        &["run", "--scenario", "s1-base", "--policies", "lemp,oracle"][..],
        &["run", "--scenario", "s1-base", "--fixed-start", "7"][..],
        &["run", "--scenario", "s1-base", "--jobs", "0", "--runs", "1", "--horizon", "10"][..],
    ] {
        let out = lemp(args, dir.path());
        assert_eq!(out.status.code(), Some(2), "{args:?}: {}", stderr(&out));
    }
}
