use std::process::{Command, Output};

use serde_json::Value;

fn run(args: &[&str]) -> (i32, Value) {
    let Output { status, stdout, .. } = Command::new(env!("CARGO_BIN_EXE_switchchain")).args(args).output().unwrap();
    let v = serde_json::from_slice(&stdout).unwrap_or(Value::Null);
    (status.code().unwrap(), v)
}

#[test]
fn verify_small_instance_passes() {
    let (code, v) = run(&["verify", "--n", "4", "--d", "1"]);
    assert_eq!(code, 0, "{v:#}");
    assert_eq!(v["ok"], true);
    assert_eq!(v["pathSample"], "All");
}

#[test]
fn fixture_reproduces() {
    let (code, v) = run(&["fixture"]);
    assert_eq!(code, 0, "{v:#}");
    assert_eq!(v["transitions"], 13);
}

#[test]
fn enumerate_counts() {
    let (code, v) = run(&["enumerate", "--n", "5", "--d", "1"]);
    assert_eq!(code, 0);
    assert_eq!(v["states"], 44);
    assert_eq!(v["connected"], true);
}

#[test]
fn exit_codes() {
    assert_eq!(run(&["enumerate", "--n", "9", "--d", "2"]).0, 3);
    assert_eq!(run(&["enumerate", "--n", "3", "--d", "1"]).0, 2);
    assert_eq!(run(&["path", "--n", "4", "--d", "1", "--from", "1", "--to", "10"]).0, 2);
    assert_eq!(run(&["path", "--n", "4", "--d", "1"]).0, 2);
    assert_eq!(run(&["mixing", "--n", "4", "--d", "1", "--eps", "1.5"]).0, 2);
    assert_eq!(run(&["bogus"]).0, 2);
}

#[test]
fn long_paths_fail_flow_audit() {
    let (code, v) = run(&["flow-audit", "--n", "6", "--d", "1"]);
    assert_eq!(code, 1);
    assert_eq!(v["counts"]["longPaths"], 40);
    assert_eq!(v["maxPathLength"], 8);
}

#[test]
fn mixing_is_ordered() {
    let (code, v) = run(&["mixing", "--n", "4", "--d", "2", "--eps", "0.01"]);
    assert_eq!(code, 0);
    let tau = v["tauExact"].as_f64().unwrap();
    assert!(tau <= v["tauLemma1"].as_f64().unwrap());
    assert!(v["tauLemma1"].as_f64().unwrap() <= v["tauTheorem1"].as_f64().unwrap());
}

#[test]
fn sampling_is_deterministic_and_round_trips() {
    let dir = std::env::temp_dir().join(format!("switchchain-cli-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let out = dir.join("g.txt");
    let args = ["sample", "--n", "7", "--d", "3", "--steps", "500", "--seed", "9", "--out", out.to_str().unwrap()];
    let (c1, a) = run(&args);
    let (c2, b) = run(&["--sequential", "sample", "--n", "7", "--d", "3", "--steps", "500", "--seed", "9"]);
    assert_eq!((c1, c2), (0, 0));
    assert_eq!(a["arcs"], b["arcs"]);
    // The written digraph starts a zero-step run that reports the same arcs.
    let (c3, again) = run(&["sample", "--n", "7", "--d", "3", "--steps", "0", "--start", out.to_str().unwrap()]);
    assert_eq!(c3, 0);
    assert_eq!(again["arcs"], a["arcs"]);
    std::fs::remove_dir_all(&dir).unwrap();
}

#[test]
fn path_between_files() {
    let dir = std::env::temp_dir().join(format!("switchchain-cli-path-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let (g, g2) = (dir.join("g.txt"), dir.join("g2.txt"));
    for (p, seed) in [(&g, "1"), (&g2, "2")] {
        assert_eq!(
            run(&["sample", "--n", "6", "--d", "2", "--steps", "200", "--seed", seed, "--out", p.to_str().unwrap()]).0,
            0
        );
    }
    let (code, v) = run(&["path", "--g", g.to_str().unwrap(), "--g2", g2.to_str().unwrap()]);
    assert_eq!(code, 0, "{v:#}");
    let steps = v["path"]["steps"].as_array().unwrap();
    assert_eq!(steps.len(), v["path"]["length"].as_u64().unwrap() as usize);
    assert!(steps.iter().all(|s| s["switch"].as_array().unwrap().len() == 4));
    std::fs::remove_dir_all(&dir).unwrap();
}
