use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

fn sfcm(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_sfcm")).args(args).output().expect("binary runs")
}

fn write(dir: &Path, name: &str, text: &str) -> PathBuf {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

#[test]
fn triangle_circuit_is_found() {
    let dir = tempfile::tempdir().unwrap();
    let g = write(dir.path(), "k3.txt", "3 3\n0 1\n1 2\n0 2\n");
    let out = sfcm(&["solve", "--input", g.to_str().unwrap(), "--mode", "circuit"]);
    assert_eq!(out.status.code(), Some(0));
    let report: Value = serde_json::from_str(&stdout(&out)).unwrap();
    assert_eq!(report["status"], "found");
    assert_eq!(report["sequence"].as_array().unwrap().len(), 3);
    assert!(report.get("elapsed_ms").is_none());
}

#[test]
fn star_path_aborts_with_code_two() {
    let dir = tempfile::tempdir().unwrap();
    let g = write(dir.path(), "star.txt", "4 3\n0 1\n0 2\n0 3\n");
    let out = sfcm(&["solve", "--input", g.to_str().unwrap(), "--mode", "path"]);
    assert_eq!(out.status.code(), Some(2));
    let report: Value = serde_json::from_str(&stdout(&out)).unwrap();
    assert_eq!(report["status"], "aborted");
    assert!(report.get("sequence").is_none());
}

#[test]
fn single_vertex_graph() {
    let dir = tempfile::tempdir().unwrap();
    let g = write(dir.path(), "one.txt", "1 0\n");
    let out = sfcm(&["solve", "--input", g.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));
    let report: Value = serde_json::from_str(&stdout(&out)).unwrap();
    assert_eq!(report["sequence"], serde_json::json!([0]));
}

#[test]
fn disconnected_graph_fails_mapping() {
    let dir = tempfile::tempdir().unwrap();
    let g = write(dir.path(), "two.txt", "4 2\n0 1\n2 3\n");
    let out = sfcm(&["solve", "--input", g.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(3));
}

#[test]
fn malformed_input_exits_one() {
    let dir = tempfile::tempdir().unwrap();
    for (name, text, code) in [
        ("loop.txt", "3 2\n0 1\n2 2\n", "SELF_LOOP"),
        ("dup.txt", "3 2\n0 1\n1 0\n", "DUPLICATE_EDGE"),
        ("range.txt", "3 1\n0 3\n", "OUT_OF_RANGE"),
        ("junk.txt", "3 1\n0 x\n", "PARSE_ERROR"),
    ] {
        let g = write(dir.path(), name, text);
        let out = sfcm(&["solve", "--input", g.to_str().unwrap()]);
        assert_eq!(out.status.code(), Some(1), "{name}");
        assert!(String::from_utf8_lossy(&out.stderr).contains(code), "{name}");
    }
    assert_eq!(sfcm(&["solve", "--bogus"]).status.code(), Some(1));
    assert_eq!(sfcm(&["solve", "--input", "/nonexistent/graph.txt"]).status.code(), Some(1));
}

#[test]
fn validate_reports_and_exits() {
    let dir = tempfile::tempdir().unwrap();
    let g = write(dir.path(), "c4.txt", "4 4\n0 1\n1 2\n2 3\n3 0\n");
    let g = g.to_str().unwrap();
    let ok = sfcm(&["validate", "--input", g, "--mode", "circuit", "--path", "0,1,2,3"]);
    assert_eq!(ok.status.code(), Some(0));
    assert_eq!(stdout(&ok).trim(), "true");
    let bad = sfcm(&["validate", "--input", g, "--mode", "path", "--path", "0,2,1,3"]);
    assert_eq!(bad.status.code(), Some(4));
    assert_eq!(stdout(&bad).trim(), "false");
}

#[test]
fn oracle_on_generated_petersen() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("petersen.txt");
    let gen = sfcm(&["gen", "--family", "petersen", "--out", p.to_str().unwrap()]);
    assert_eq!(gen.status.code(), Some(0));
    let none = sfcm(&["oracle", "--input", p.to_str().unwrap(), "--mode", "circuit"]);
    assert_eq!(stdout(&none).trim(), "none");
    let found = sfcm(&["oracle", "--input", p.to_str().unwrap(), "--mode", "path"]);
    let text = stdout(&found);
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("found"));
    let witness = lines.next().unwrap();
    let check = sfcm(&["validate", "--input", p.to_str().unwrap(), "--mode", "path", "--path", witness]);
    assert_eq!(check.status.code(), Some(0));
}

#[test]
fn gen_is_seeded() {
    let a = sfcm(&["gen", "--family", "planted_cycle", "--n", "15", "--seed", "4"]);
    let b = sfcm(&["gen", "--family", "planted_cycle", "--n", "15", "--seed", "4"]);
    let c = sfcm(&["gen", "--family", "planted_cycle", "--n", "15", "--seed", "5"]);
    assert_eq!(a.stdout, b.stdout);
    assert_ne!(a.stdout, c.stdout);
    assert!(stdout(&a).starts_with("15 "));
}

#[test]
fn solve_writes_side_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let g = dir.path().join("grid.txt");
    sfcm(&["gen", "--family", "grid", "--n", "4", "--out", g.to_str().unwrap()]);
    let json = dir.path().join("r.json");
    let dot = dir.path().join("r.dot");
    let trace = dir.path().join("r.jsonl");
    let out = sfcm(&[
        "solve",
        "--input",
        g.to_str().unwrap(),
        "--json",
        json.to_str().unwrap(),
        "--dot",
        dot.to_str().unwrap(),
        "--trace",
        trace.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(std::fs::read_to_string(&json).unwrap(), stdout(&out));
    assert!(std::fs::read_to_string(&dot).unwrap().starts_with("graph overlay {"));
    let lines = std::fs::read_to_string(&trace).unwrap();
    assert!(!lines.is_empty());
    for l in lines.lines() {
        let v: Value = serde_json::from_str(l).unwrap();
        assert!(v["gamma"].is_number() && v["t"].is_number());
    }
}

#[test]
fn timing_flag_adds_elapsed() {
    let dir = tempfile::tempdir().unwrap();
    let g = write(dir.path(), "k3.txt", "3 3\n0 1\n1 2\n0 2\n");
    let out = sfcm(&["solve", "--input", g.to_str().unwrap(), "--timing"]);
    let report: Value = serde_json::from_str(&stdout(&out)).unwrap();
    assert!(report["elapsed_ms"].is_u64());
}

#[test]
fn dump_config_round_trips_through_config() {
    let dir = tempfile::tempdir().unwrap();
    let dumped = sfcm(&["solve", "--dump-config"]);
    assert_eq!(dumped.status.code(), Some(0));
    let cfg = write(dir.path(), "policy.json", &stdout(&dumped));
    let g = write(dir.path(), "k4.txt", "4 6\n0 1\n0 2\n0 3\n1 2\n1 3\n2 3\n");
    let out = sfcm(&["solve", "--input", g.to_str().unwrap(), "--config", cfg.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));
}

#[test]
fn bench_summary_schema() {
    let dir = tempfile::tempdir().unwrap();
    let suite = write(
        dir.path(),
        "suite.json",
        r#"{"mode":"circuit","seeds":[0,1],"families":[{"family":"planted_cycle","n":10,"p":0.15},{"family":"named","name":"petersen"}]}"#,
    );
    let out_path = dir.path().join("bench.json");
    let out = sfcm(&["bench", "--suite", suite.to_str().unwrap(), "--out", out_path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));
    let s: Value = serde_json::from_str(&std::fs::read_to_string(&out_path).unwrap()).unwrap();
    assert_eq!(s["instances"], 4);
    let parts = ["found", "aborted", "mapping_failed"].map(|k| s[k].as_u64().unwrap());
    assert_eq!(parts.iter().sum::<u64>(), 4);
    assert_eq!(s["reports"].as_array().unwrap().len(), 4);
    for k in ["success_rate", "mean_mu_x", "min_mu_x", "max_mu_x"] {
        assert!(s[k].is_number(), "{k}");
    }
}
