use std::path::PathBuf;
use std::process::{Command, Output};

fn hardtsp(args: &[&str]) -> Output {
    let out = Command::new(env!("CARGO_BIN_EXE_hardtsp")).args(args).output().unwrap();
    assert!(
        out.status.success(),
        "hardtsp {args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    out
}

fn gr24() -> String {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("../core/tests/data/gr24.tsp")
        .to_string_lossy()
        .into_owned()
}

#[test]
fn convert_then_evaluate() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("gr24_full.tsp");
    hardtsp(&["convert", &gr24(), out.to_str().unwrap()]);
    let text = std::fs::read_to_string(&out).unwrap();
    assert!(text.contains("EDGE_WEIGHT_FORMAT: FULL_MATRIX"));
    let report = hardtsp(&["evaluate", out.to_str().unwrap(), "--reps", "1"]);
    let json: serde_json::Value = serde_json::from_slice(&report.stdout).unwrap();
    assert_eq!(json["tour"], 1272.0);
}

#[test]
fn export_dot_prints_a_graph() {
    let out = hardtsp(&["export-dot", &gr24()]);
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.starts_with("graph \"gr24\" {"));
    assert!(text.matches(" -- ").count() >= 24);
    assert!(text.trim_end().ends_with('}'));
}

#[test]
fn generate_writes_instances_and_summary() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path().to_str().unwrap();
    hardtsp(&[
        "generate",
        "--n",
        "8",
        "--r",
        "2",
        "--reps",
        "1",
        "--seed",
        "3",
        "--out-dir",
        d,
    ]);
    let summary = std::fs::read_to_string(dir.path().join("summary.csv")).unwrap();
    assert_eq!(summary.lines().count(), 3);
    let tsp = std::fs::read_dir(dir.path())
        .unwrap()
        .filter(|e| e.as_ref().unwrap().path().extension().is_some_and(|x| x == "tsp"))
        .count();
    assert_eq!(tsp, 2);
    // Both rows share n, so no fit exists.
    let fit = Command::new(env!("CARGO_BIN_EXE_hardtsp"))
        .args(["regress", dir.path().join("summary.csv").to_str().unwrap()])
        .output()
        .unwrap();
    assert!(!fit.status.success());
}

#[test]
fn sample_and_regress() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path().to_str().unwrap();
    hardtsp(&["sample", "--n", "7", "--count", "3", "--out-dir", d]);
    let lines = std::fs::read_to_string(dir.path().join("vertices.jsonl")).unwrap();
    assert_eq!(lines.lines().count(), 3);
    let csv = dir.path().join("t.csv");
    std::fs::write(&csv, "n,runtime\n10,0.1\n11,0.2\n12,0.4\n").unwrap();
    let out = hardtsp(&["regress", csv.to_str().unwrap()]);
    let json: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert!((json["slope"].as_f64().unwrap() - 2f64.log10()).abs() < 1e-12);
}

#[test]
fn unsupported_file_fails_with_keyword() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("c.tsp");
    std::fs::write(&p, "TYPE: TSP\nDIMENSION: 3\nEDGE_WEIGHT_TYPE: CEIL_2D\nEOF\n").unwrap();
    let out = Command::new(env!("CARGO_BIN_EXE_hardtsp"))
        .args(["evaluate", p.to_str().unwrap()])
        .output()
        .unwrap();
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("CEIL_2D"));
}
