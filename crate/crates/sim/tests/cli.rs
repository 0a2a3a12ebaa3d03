use std::process::{Command, Output};

fn isac(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_isac")).args(args).output().unwrap()
}

#[test]
fn missing_scenario_prints_one_json_error_line() {
    let dir = tempfile::tempdir().unwrap();
    let missing = dir.path().join("nope.json");
    let out = isac(&[
        "dataset", "generate", "--scenario", missing.to_str().unwrap(), "--trajectories", "1", "--policy", "closest",
        "--seed", "1", "--out", dir.path().join("d.jsonl").to_str().unwrap(),
    ]);
    assert!(!out.status.success());
    let stderr = String::from_utf8(out.stderr).unwrap();
    let line = stderr.lines().last().unwrap();
    let v: serde_json::Value = serde_json::from_str(line).unwrap();
    assert!(v["error"]["kind"].is_string());
    assert!(v["error"]["message"].is_string());
}

#[test]
fn unknown_policy_is_an_error() {
    let dir = tempfile::tempdir().unwrap();
    let sc = dir.path().join("s.json");
    assert!(isac(&["scenario", "init", "--out", sc.to_str().unwrap()]).status.success());
    let out = isac(&[
        "dataset", "generate", "--scenario", sc.to_str().unwrap(), "--trajectories", "1", "--policy", "random",
        "--seed", "1", "--out", dir.path().join("d.jsonl").to_str().unwrap(),
    ]);
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("\"error\""));
}

#[test]
fn synthesize_writes_both_cuts_and_grid() {
    let dir = tempfile::tempdir().unwrap();
    let sc = dir.path().join("s.json");
    assert!(isac(&["scenario", "init", "--out", sc.to_str().unwrap()]).status.success());
    let cuts = dir.path().join("cut.csv");
    let grid = dir.path().join("grid.csv");
    let out = isac(&[
        "synthesize", "--scenario", sc.to_str().unwrap(), "--az", "43.6", "--el", "16.2", "--sll-az", "15",
        "--sll-el", "15", "--eirp", "15.38", "--null", "12.61,42.63", "--null", "76.64,42.4", "--out-cuts",
        cuts.to_str().unwrap(), "--out-grid", grid.to_str().unwrap(),
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let stdout = String::from_utf8(out.stdout).unwrap();
    assert!(stdout.contains("converged: true"));
    assert!(stdout.contains("active_elements: 100"));
    for path in [cuts.clone(), dir.path().join("cut_elevation.csv")] {
        let text = std::fs::read_to_string(path).unwrap();
        assert!(text.starts_with("angle_deg,gain_db"));
        let peak = text
            .lines()
            .skip(1)
            .map(|l| l.split(',').nth(1).unwrap().parse::<f64>().unwrap())
            .fold(f64::NEG_INFINITY, f64::max);
        assert!(peak.abs() < 1e-9);
    }
    assert!(std::fs::read_to_string(grid).unwrap().starts_with("az_deg,el_deg,gain_db"));
}

#[test]
fn eirp_stats_from_eval_records() {
    let dir = tempfile::tempdir().unwrap();
    let p = |n: &str| dir.path().join(n).to_string_lossy().into_owned();
    assert!(isac(&["scenario", "init", "--out", &p("s.json")]).status.success());
    let out = isac(&[
        "eval", "trajectory", "--scenario", &p("s.json"), "--policy", "closest", "--source", "optimizer", "--seed",
        "3", "--out", &p("e.csv"),
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let out = isac(&["eval", "eirp", "--records", &p("e.csv"), "--thresholds", "10,15", "--out", &p("st.csv")]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let text = std::fs::read_to_string(p("st.csv")).unwrap();
    assert!(text.starts_with("policy,kind,x,y"));
    assert_eq!(text.lines().filter(|l| l.starts_with("closest,outage,")).count(), 2);
    assert_eq!(text.lines().filter(|l| l.starts_with("closest,mean_rate,")).count(), 1);
}

#[test]
fn nn_policy_without_bundle_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let p = |n: &str| dir.path().join(n).to_string_lossy().into_owned();
    assert!(isac(&["scenario", "init", "--out", &p("s.json")]).status.success());
    let out = isac(&[
        "eval", "trajectory", "--scenario", &p("s.json"), "--policy", "nn", "--source", "optimizer", "--seed", "3",
        "--out", &p("e.csv"),
    ]);
    assert!(!out.status.success());
}
