//! End-to-end tests for the binary: exit codes, wire formats, determinism.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn bin() -> &'static str {
    env!("CARGO_BIN_EXE_toric-szego")
}

fn fixtures() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("../../polytopes")
        .canonicalize()
        .expect("fixture directory")
}

fn run(args: &[&str]) -> Output {
    Command::new(bin())
        .args(args)
        .env_remove("TORIC_SZEGO_THREADS")
        .output()
        .expect("binary runs")
}

fn stdout(out: &Output) -> String {
    String::from_utf8_lossy(&out.stdout).into_owned()
}

#[test]
fn missing_file_exits_2() {
    let out = run(&["polytope", "info", "no-such-file.json"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn invalid_json_exits_2() {
    let dir = std::env::temp_dir().join("toric-szego-test-badjson");
    std::fs::create_dir_all(&dir).unwrap();
    let path = dir.join("bad.json");
    std::fs::write(&path, "{\"dim\": 1, \"vertices\": [[0.5], [2]]}").unwrap();
    let out = run(&["polytope", "info", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn vertex_outside_quadrant_exits_3() {
    let dir = std::env::temp_dir().join("toric-szego-test-negvert");
    std::fs::create_dir_all(&dir).unwrap();
    let path = dir.join("neg.json");
    std::fs::write(&path, "{\"dim\": 1, \"vertices\": [[-1], [2]]}").unwrap();
    let out = run(&["polytope", "info", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(3));
}

#[test]
fn delzant_certificate_for_remark_simplex() {
    let file = fixtures().join("remark-simplex.json");
    let out = run(&["polytope", "delzant", file.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));
    let text = stdout(&out);
    assert!(text.contains("NOT Delzant"), "{text}");
    assert!(text.contains("|det|=2"), "{text}");
}

#[test]
fn polytope_info_counts_lattice_points() {
    let file = fixtures().join("square.json");
    let out = run(&["polytope", "info", file.to_str().unwrap(), "--dilate", "3"]);
    assert_eq!(out.status.code(), Some(0));
    assert!(stdout(&out).contains("lattice points (N=3): 16"));
}

#[test]
fn partition_reports_the_undecomposable_point() {
    let file = fixtures().join("remark-simplex.json");
    let out = run(&["partition", file.to_str().unwrap(), "-N", "2"]);
    assert_eq!(out.status.code(), Some(0));
    let text = stdout(&out);
    assert!(text.lines().next().unwrap().starts_with("# toric-szego partition"));
    assert!(text.contains("alpha_1,alpha_2,alpha_3,count"));
    assert!(text.contains("1,1,1,0"), "{text}");
}

#[test]
fn multiplier_column_is_constant_on_projective_line() {
    let file = fixtures().join("simplex1.json");
    let out = run(&["multiplier", file.to_str().unwrap(), "-N", "3"]);
    assert_eq!(out.status.code(), Some(0));
    let text = stdout(&out);
    let mut data_rows = 0;
    for line in text.lines().filter(|l| !l.starts_with('#')).skip(1) {
        let fields: Vec<&str> = line.split(',').collect();
        assert_eq!(fields.len(), 5, "{line}");
        let eigen: f64 = fields[3].parse().unwrap();
        assert!((eigen - 4.0).abs() < 1e-12, "{line}");
        data_rows += 1;
    }
    assert_eq!(data_rows, 4);
}

#[test]
fn norms_match_closed_form_on_simplex2() {
    let file = fixtures().join("simplex2.json");
    let out = run(&["norms", file.to_str().unwrap(), "-N", "2"]);
    assert_eq!(out.status.code(), Some(0));
    let text = stdout(&out);
    // fast path: every row is closed-form with zero error
    for line in text.lines().filter(|l| !l.starts_with('#')).skip(1) {
        assert!(line.contains("closed-form"), "{line}");
    }
    // Q(0,0) at N=2 is 2!/(4!) = 1/12
    let first = text
        .lines()
        .filter(|l| !l.starts_with('#'))
        .nth(1)
        .unwrap();
    let q: f64 = first.split(',').nth(2).unwrap().parse().unwrap();
    assert!((q - 1.0 / 12.0).abs() < 1e-15);
}

#[test]
fn verify_factorization_passes_on_veronese() {
    let file = fixtures().join("veronese.json");
    let out = run(&[
        "verify",
        "factorization",
        file.to_str().unwrap(),
        "-N",
        "3",
        "--samples",
        "8",
        "--seed",
        "7",
    ]);
    assert_eq!(out.status.code(), Some(0), "{}", stdout(&out));
    let text = stdout(&out);
    let report: serde_json::Value = serde_json::from_str(&text).unwrap();
    assert_eq!(report["pass"], true);
    assert_eq!(report["checks"].as_array().unwrap().len(), 3);
}

#[test]
fn verify_factorization_refuses_non_delzant() {
    let file = fixtures().join("remark-simplex.json");
    let out = run(&["verify", "factorization", file.to_str().unwrap(), "-N", "2"]);
    assert_eq!(out.status.code(), Some(3));
}

#[test]
fn verify_asymptotics_square_ray() {
    let file = fixtures().join("square.json");
    let out = run(&[
        "verify",
        "asymptotics",
        file.to_str().unwrap(),
        "--ray",
        "0.5,0.5",
        "--N",
        "8,16,32",
    ]);
    assert_eq!(out.status.code(), Some(0), "{}", stdout(&out));
    let report: serde_json::Value = serde_json::from_str(&stdout(&out)).unwrap();
    assert_eq!(report["pass"], true);
    let diffs = report["differences"].as_array().unwrap();
    assert_eq!(diffs.len(), 2);
    assert!(diffs[1].as_f64().unwrap().abs() < diffs[0].as_f64().unwrap().abs());
}

#[test]
fn verify_characters_passes_on_square() {
    let file = fixtures().join("square.json");
    let out = run(&[
        "verify",
        "characters",
        file.to_str().unwrap(),
        "-N",
        "2",
        "--samples",
        "3",
        "--seed",
        "5",
    ]);
    assert_eq!(out.status.code(), Some(0), "{}", stdout(&out));
    let report: serde_json::Value = serde_json::from_str(&stdout(&out)).unwrap();
    assert_eq!(report["pass"], true);
    assert_eq!(report["checks"].as_array().unwrap().len(), 2);
}

#[test]
fn polytope_info_range_lists_counts() {
    let file = fixtures().join("simplex2.json");
    let out = run(&["polytope", "info", file.to_str().unwrap(), "--range", "1..3"]);
    assert_eq!(out.status.code(), Some(0));
    let text = stdout(&out);
    assert!(text.contains("lattice points (N=1): 3"));
    assert!(text.contains("lattice points (N=2): 6"));
    assert!(text.contains("lattice points (N=3): 10"));
}

#[test]
fn verify_exit_1_on_genuine_check_failure() {
    // an unevenly spaced dilation list breaks the shrinking-gap criterion:
    // r9 - r8 is tiny while r32 - r9 is large
    let file = fixtures().join("square.json");
    let out = run(&[
        "verify",
        "asymptotics",
        file.to_str().unwrap(),
        "--ray",
        "0.5,0.5",
        "--N",
        "8,9,32",
    ]);
    assert_eq!(out.status.code(), Some(1), "{}", stdout(&out));
    let report: serde_json::Value = serde_json::from_str(&stdout(&out)).unwrap();
    assert_eq!(report["pass"], false);
}

#[test]
fn kernel_report_wire_format() {
    let file = fixtures().join("simplex1.json");
    let out = run(&[
        "kernel",
        file.to_str().unwrap(),
        "-N",
        "2",
        "--samples",
        "3",
        "--seed",
        "11",
    ]);
    assert_eq!(out.status.code(), Some(0));
    let report: serde_json::Value = serde_json::from_str(&stdout(&out)).unwrap();
    assert_eq!(report["N"], 2);
    assert_eq!(report["seed"], 11);
    assert_eq!(report["pairs"].as_array().unwrap().len(), 3);
    let pair = &report["pairs"][0];
    for key in ["x", "y", "pi_direct", "pi_factored", "resid_abs", "resid_rel"] {
        assert!(pair.get(key).is_some(), "missing {key}");
    }
    assert!(report["max_resid_rel"].as_f64().unwrap() <= 1e-10);
    assert!(report["config"]["content_hash"].as_str().unwrap().len() == 64);
}

#[test]
fn character_sweep_has_wire_columns() {
    let file = fixtures().join("simplex1.json");
    let out = run(&["character", "sweep", file.to_str().unwrap(), "-N", "2", "--grid", "4"]);
    assert_eq!(out.status.code(), Some(0));
    let text = stdout(&out);
    let header = text.lines().find(|l| !l.starts_with('#')).unwrap();
    assert_eq!(
        header,
        "phi_1,re_exact,im_exact,re_trace,im_trace,re_leading,im_leading,gap_trace,gap_leading"
    );
    let rows = text
        .lines()
        .filter(|l| !l.starts_with('#'))
        .skip(1)
        .count();
    assert_eq!(rows, 4);
}

#[test]
fn reports_are_byte_identical_across_reruns() {
    let file = fixtures().join("veronese.json");
    let args = [
        "norms",
        file.to_str().unwrap(),
        "-N",
        "2",
        "--threads",
        "1",
    ];
    let a = run(&args);
    let b = run(&args);
    assert_eq!(a.status.code(), Some(0));
    assert_eq!(a.stdout, b.stdout);

    // multi-entry quadrature table with the thread pool engaged
    let args = ["norms", file.to_str().unwrap(), "-N", "3", "--threads", "4"];
    let c = run(&args);
    let d = run(&["norms", file.to_str().unwrap(), "-N", "3", "--threads", "1"]);
    assert_eq!(stdout(&c).replace("\"threads\":4", "\"threads\":1"), stdout(&d));
}

#[test]
fn out_dir_writes_files() {
    let dir = std::env::temp_dir().join("toric-szego-test-outdir");
    let _ = std::fs::remove_dir_all(&dir);
    let file = fixtures().join("simplex1.json");
    let out = run(&[
        "partition",
        file.to_str().unwrap(),
        "-N",
        "2",
        "-o",
        dir.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0));
    let written = dir.join("simplex1_partition_N2.csv");
    assert!(written.exists());
    let text = std::fs::read_to_string(written).unwrap();
    assert!(text.contains("alpha_1,count"));
}

#[test]
fn weighted_polytope_flows_through_norms() {
    let file = fixtures().join("veronese-fs.json");
    let out = run(&["norms", file.to_str().unwrap(), "-N", "1"]);
    assert_eq!(out.status.code(), Some(0));
    // Fubini-Study weights on [0,2] hit the scaled closed form: 2/3, 1/3, 2/3
    let text = stdout(&out);
    let rows: Vec<&str> = text.lines().filter(|l| !l.starts_with('#')).skip(1).collect();
    let q0: f64 = rows[0].split(',').nth(1).unwrap().parse().unwrap();
    let q1: f64 = rows[1].split(',').nth(1).unwrap().parse().unwrap();
    assert!((q0 - 2.0 / 3.0).abs() < 1e-12);
    assert!((q1 - 1.0 / 3.0).abs() < 1e-12);
}

#[test]
fn env_var_sets_thread_count() {
    let file = fixtures().join("simplex1.json");
    let out = Command::new(bin())
        .args(["partition", file.to_str().unwrap(), "-N", "2"])
        .env("TORIC_SZEGO_THREADS", "2")
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0));
    assert!(stdout(&out).contains("\"threads\":2"));
}

#[test]
fn report_command_summarizes_everything() {
    let file = fixtures().join("square.json");
    let out = run(&["report", file.to_str().unwrap(), "-N", "2"]);
    assert_eq!(out.status.code(), Some(0));
    let doc: serde_json::Value = serde_json::from_str(&stdout(&out)).unwrap();
    assert_eq!(doc["polytope"]["delzant"], true);
    assert_eq!(doc["polytope"]["lattice_points"], 9);
    assert_eq!(doc["partition"]["total"], "16");
    assert_eq!(doc["norms"]["flagged"], false);
}
