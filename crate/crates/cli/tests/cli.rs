use std::path::Path;
use std::process::{Command, Output};

fn llpd(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_llpd"))
        .args(args)
        .env_remove("LLPD_THREADS")
        .output()
        .expect("binary runs")
}

fn ok(args: &[&str]) -> String {
    let out = llpd(args);
    assert!(out.status.success(), "{args:?} failed: {}", String::from_utf8_lossy(&out.stderr));
    String::from_utf8(out.stdout).unwrap()
}

fn path(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn report(dir: &Path) -> serde_json::Value {
    serde_json::from_slice(&std::fs::read(dir.join("report.json")).unwrap()).unwrap()
}

#[test]
fn generate_writes_points_and_labels() {
    let dir = tempfile::tempdir().unwrap();
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    ok(&["generate", "--generate", "nine-gaussians", "--seed", "3", "--out", path(&a)]);
    ok(&["generate", "--generate", "nine-gaussians", "--seed", "3", "--out", path(&b)]);
    let points = std::fs::read(a.join("points.csv")).unwrap();
    assert_eq!(String::from_utf8_lossy(&points).lines().count(), 500);
    assert_eq!(std::fs::read_to_string(a.join("labels.csv")).unwrap().lines().count(), 500);
    assert_eq!(points, std::fs::read(b.join("points.csv")).unwrap());
}

#[test]
fn unknown_kind_is_a_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    let out = llpd(&["generate", "--generate", "five-circles", "--out", path(dir.path())]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn cluster_four_lines() {
    let dir = tempfile::tempdir().unwrap();
    let stdout = ok(&["cluster", "--generate", "four-lines", "--scale", "0.05", "--out", path(dir.path())]);
    assert!(stdout.contains("K_hat=4"), "{stdout}");
    let json = report(dir.path());
    assert_eq!(json["K_hat"], 4);
    assert_eq!(json["schema_version"], 1);
    for file in ["labels.csv", "eigencurves.csv", "sorted_beta.csv"] {
        assert!(dir.path().join(file).exists(), "{file}");
    }
    let curves = std::fs::read_to_string(dir.path().join("eigencurves.csv")).unwrap();
    assert_eq!(curves.lines().count(), 21);
}

#[test]
fn fixed_k_skips_estimation() {
    let dir = tempfile::tempdir().unwrap();
    ok(&["cluster", "--generate", "nine-gaussians", "--k", "4", "--threads", "1", "--out", path(dir.path())]);
    let json = report(dir.path());
    assert!(json["K_hat"].is_null());
    assert_eq!(json["K"], 4);
}

#[test]
fn euclidean_refuses_large_inputs() {
    let dir = tempfile::tempdir().unwrap();
    let out = llpd(&["cluster", "--generate", "four-lines", "--scale", "0.05", "--method", "euclidean", "--out", path(dir.path())]);
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("2500"));
    assert!(!dir.path().join("report.json").exists());
}

#[test]
fn cluster_a_file_then_evaluate() {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("data");
    let run = dir.path().join("run");
    ok(&["generate", "--generate", "nine-gaussians", "--out", path(&data)]);
    let points = data.join("points.csv");
    let truth = data.join("labels.csv");
    ok(&["cluster", "--input", path(&points), "--truth", path(&truth), "--out", path(&run)]);
    let oa = report(&run)["oa"].as_f64().unwrap();
    assert!(oa > 0.95);

    let stdout = ok(&["evaluate", "--labels", path(&run.join("labels.csv")), "--truth", path(&truth), "--row", "NG"]);
    let (json, row) = stdout.rsplit_once('\n').map(|(a, _)| a.rsplit_once('\n').unwrap()).unwrap();
    let scores: serde_json::Value = serde_json::from_str(json).unwrap();
    assert!((scores["oa"].as_f64().unwrap() - oa).abs() < 1e-12);
    assert!(row.starts_with("| NG | "));
}

#[test]
fn evaluate_identical_and_permuted_labels() {
    let dir = tempfile::tempdir().unwrap();
    let truth = dir.path().join("truth.csv");
    let permuted = dir.path().join("permuted.csv");
    std::fs::write(&truth, "1\n1\n2\n2\n3\n0\n").unwrap();
    std::fs::write(&permuted, "3\n3\n1\n1\n2\n2\n").unwrap();
    for labels in [&truth, &permuted] {
        let json: serde_json::Value = serde_json::from_str(&ok(&["evaluate", "--labels", path(labels), "--truth", path(&truth)])).unwrap();
        assert_eq!(json["oa"], 1.0);
        assert_eq!(json["kappa"], 1.0);
    }
    let short = dir.path().join("short.csv");
    std::fs::write(&short, "1\n2\n").unwrap();
    assert!(!llpd(&["evaluate", "--labels", path(&short), "--truth", path(&truth)]).status.success());
}

#[test]
fn bench_single_size() {
    let dir = tempfile::tempdir().unwrap();
    let stdout = ok(&["bench", "--sizes", "2000", "--scales", "10", "--repeats", "2", "--out", path(dir.path())]);
    let lines: Vec<&str> = stdout.lines().collect();
    assert_eq!(lines[0], "n,m,mean_seconds,sd_seconds");
    assert_eq!(lines.len(), 2);
    assert!(lines[1].starts_with("2000,10,"));
    let rows = std::fs::read_to_string(dir.path().join("bench.csv")).unwrap();
    assert_eq!(rows.lines().count(), 3);
}
