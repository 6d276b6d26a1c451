use std::path::PathBuf;
use std::process::Command;

use fractop::cli::run_from;
use fractop::samples::catalog;
use fractop::{Error, IfsSpec};
use serde_json::Value;

fn data(stem: &str) -> String {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("data").join(format!("{stem}.json")).display().to_string()
}

fn scratch(name: &str) -> PathBuf {
    let dir = PathBuf::from(env!("CARGO_TARGET_TMPDIR")).join("cli");
    std::fs::create_dir_all(&dir).unwrap();
    dir.join(name)
}

fn results(args: &[&str]) -> Value {
    let out = run_from(["fractop"].iter().chain(args)).unwrap();
    assert_eq!(out.status, 0, "{:?}", out.report.warnings);
    out.report.results
}

#[test]
fn data_files_match_catalog() {
    for (stem, spec) in catalog() {
        let text = std::fs::read_to_string(data(stem)).unwrap();
        assert_eq!(IfsSpec::from_json(&text).unwrap(), spec, "{stem}");
    }
}

#[test]
fn gasket_dim_rows_follow_closed_form() {
    let r = results(&["gasket", "dim", &data("sierpinski"), "-m", "1..5", "--scheme", "uniform", "--json"]);
    let rows = r["rows"].as_array().unwrap();
    assert_eq!(rows.len(), 5);
    for row in rows {
        let m = row["m"].as_f64().unwrap();
        let want = (6.0 * m + 3.0).ln() / (2.0 * m + 2.0).ln();
        assert!((row["dim"].as_f64().unwrap() - want).abs() < 1e-12);
    }
}

#[test]
fn self_classification_is_lipschitz() {
    let f = data("sierpinski");
    let r = results(&["classify", &f, &f]);
    assert_eq!(r["classification"]["verdict"], "Lipschitz");
}

#[test]
fn automaton_dot_has_eight_states() {
    let dot = scratch("a.dot");
    let r = results(&["automaton", "build", &data("sierpinski"), "--dot", dot.to_str().unwrap()]);
    assert_eq!(r["state_count"], 8);
    let text = std::fs::read_to_string(dot).unwrap();
    assert_eq!(text.lines().filter(|l| l.contains("[label=") && !l.contains("->")).count(), 8);
}

#[test]
fn metric_check_reports_constants() {
    let r = results(&["metric", "check", &data("k_quarter"), "--samples", "200", "--depth", "6"]);
    for k in ["xi1", "xi2", "c", "c1", "c2", "c3"] {
        assert!(r.get(k).is_some(), "{k}");
    }
    assert_eq!(r["violations"].as_array().unwrap().len(), 0);
}

#[test]
fn graph_refine_uniform_sierpinski() {
    let svg = scratch("g1.svg");
    let r = results(&["graph", "refine", &data("sierpinski"), "-n", "1", "--svg", svg.to_str().unwrap()]);
    assert_eq!((r["vertices"].as_u64(), r["edges"].as_u64()), (Some(6), Some(9)));
    assert_eq!(r["exact"], true);
    let text = std::fs::read_to_string(svg).unwrap();
    assert_eq!(text.matches("<line").count(), 9);
}

#[test]
fn graph_refine_reads_assignment_file() {
    let path = scratch("assign.json");
    std::fs::write(&path, r#"{"tau0": {"1-2": 1, "1-3": 1, "2-3": 1}, "R": [0.5, 0.5, 0.5]}"#).unwrap();
    let r = results(&["graph", "refine", &data("sierpinski"), "--assign", path.to_str().unwrap(), "-n", "2"]);
    assert_eq!(r["good_assignment"]["edges_geodesic"], true);
}

#[test]
fn bad_assignment_exits_with_three() {
    let path = scratch("bad.json");
    std::fs::write(&path, r#"{"tau0": {"1-2": 1, "1-3": 1, "2-3": 3}, "R": [0.5, 0.5, 0.5]}"#).unwrap();
    let out = run_from(["fractop", "graph", "refine", &data("sierpinski"), "--assign", path.to_str().unwrap()]).unwrap();
    assert_eq!(out.status, 3);
}

#[test]
fn dendrite_dim_rows() {
    let r = results(&["dendrite", "dim", &data("k_quarter"), "-m", "1..3", "--delta", "1e-3", "--c", "1"]);
    let s: Vec<f64> = r["rows"].as_array().unwrap().iter().map(|x| x["s_m"].as_f64().unwrap()).collect();
    assert_eq!(s.len(), 3);
    assert!(s[0] > s[1] && s[1] > s[2] && s[2] > 1.0);
}

#[test]
fn validation_failures_exit_with_two() {
    let e = run_from(["fractop", "dendrite", "dim", &data("sierpinski")]).unwrap_err();
    assert!(matches!(e, Error::NotDendrite(_)));
    assert_eq!(e.exit_code(), 2);
    let e = run_from(["fractop", "gasket", "dim", &data("k_quarter")]).unwrap_err();
    assert_eq!(e.exit_code(), 2);
}

#[test]
fn uniform_scheme_rejects_s_flags() {
    let e = run_from(["fractop", "gasket", "dim", &data("sierpinski"), "--s-factor", "1.1"]).unwrap_err();
    assert!(matches!(e, Error::DomainError(_)));
}

#[test]
fn render_scenes_are_deterministic() {
    for (scene, stem) in [("iteration", "sierpinski"), ("graph", "sierpinski"), ("main-tree", "k_quarter"), ("automaton", "sierpinski")] {
        let out = scratch(&format!("{scene}.svg"));
        let args = ["fractop", "render", scene, &data(stem), "-o", out.to_str().unwrap()];
        let a = run_from(args).unwrap().report.to_json();
        let first = std::fs::read(&out).unwrap();
        let b = run_from(args).unwrap().report.to_json();
        assert_eq!(a, b);
        assert_eq!(first, std::fs::read(&out).unwrap());
        assert!(String::from_utf8(first).unwrap().contains("version=\"1.1\""));
    }
}

#[test]
fn iteration_scene_draws_nine_triangles() {
    let out = scratch("f1.svg");
    run_from(["fractop", "render", "iteration", &data("sierpinski"), "-o", out.to_str().unwrap(), "-m", "1"]).unwrap();
    let text = std::fs::read_to_string(out).unwrap();
    assert_eq!(text.matches("<polygon").count(), 10);
}

#[test]
fn timing_is_opt_in() {
    let f = data("interval");
    let plain = run_from(["fractop", "validate", &f]).unwrap().report;
    assert!(plain.timing_ms.is_none());
    let timed = run_from(["fractop", "validate", &f, "--timing"]).unwrap().report;
    assert!(timed.timing_ms.is_some());
    assert_eq!(plain.spec_digest, timed.spec_digest);
}

#[test]
fn binary_exit_codes_and_json() {
    let bin = env!("CARGO_BIN_EXE_fractop");
    let ok = Command::new(bin).args(["validate", &data("sierpinski"), "--json"]).env("FRACTOP_THREADS", "2").output().unwrap();
    assert_eq!(ok.status.code(), Some(0));
    let v: Value = serde_json::from_slice(&ok.stdout).unwrap();
    assert_eq!(v["schema_version"], 1);
    assert_eq!(v["command"], "validate");

    let missing = Command::new(bin).args(["validate", "does-not-exist.json", "--json"]).output().unwrap();
    assert_eq!(missing.status.code(), Some(1));
    let v: Value = serde_json::from_slice(&missing.stdout).unwrap();
    assert_eq!(v["error"]["kind"], "Io");

    let not_dendrite = Command::new(bin).args(["dendrite", "dim", &data("sierpinski")]).output().unwrap();
    assert_eq!(not_dendrite.status.code(), Some(2));
}
