use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

/// Runs the binary in `dir` with whitespace-separated `args`.
fn hne(args: &str, dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_hne"))
        .args(args.split_whitespace())
        .current_dir(dir)
        .output()
        .expect("binary runs")
}

fn read_csv(path: &Path) -> Vec<Vec<f64>> {
    fs::read_to_string(path)
        .unwrap()
        .lines()
        .map(|l| l.split(',').map(|v| v.parse().unwrap()).collect())
        .collect()
}

fn read_json(path: &Path) -> Value {
    serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap()
}

fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

/// Ten points on a slightly bent sheet, no two equidistant from a third.
fn write_small(path: &Path) {
    let mut s = String::new();
    for i in 0..10 {
        let (x, y) = ((i % 4) as f64 * 1.1, (i / 4) as f64 * 0.9 + 0.01 * i as f64);
        s += &format!("{x},{y},{}\n", 0.05 * x * x);
    }
    fs::write(path, s).unwrap();
}

#[test]
fn generate_swiss_roll_writes_csv_and_meta() {
    let dir = tempfile::tempdir().unwrap();
    let out = hne(
        "generate --dataset swiss-roll --n 300 --seed 7 --out sr.csv",
        dir.path(),
    );
    assert!(out.status.success(), "{}", stderr(&out));
    let rows = read_csv(&dir.path().join("sr.csv"));
    assert_eq!(rows.len(), 300);
    assert!(rows.iter().all(|r| r.len() == 3));
    let meta = read_json(&dir.path().join("sr.meta.json"));
    assert_eq!(meta["params"]["n"], 300);
    assert_eq!(meta["params"]["seed"], 7);
    assert_eq!(meta["intrinsic"].as_array().unwrap().len(), 300);
}

#[test]
fn generate_swiss_hole_leaves_hole_empty() {
    let dir = tempfile::tempdir().unwrap();
    let out = hne("generate --dataset swiss-hole --n 1000 --out sh.csv", dir.path());
    assert!(out.status.success());
    let meta = read_json(&dir.path().join("sh.meta.json"));
    let pi = std::f64::consts::PI;
    for q in meta["intrinsic"].as_array().unwrap() {
        let (t, h) = (q[0].as_f64().unwrap(), q[1].as_f64().unwrap());
        assert!(!((2.5 * pi..=3.5 * pi).contains(&t) && (7.0..=14.0).contains(&h)));
    }
}

#[test]
fn generate_cluster_and_surfaces_record_bridge_counts() {
    let dir = tempfile::tempdir().unwrap();
    assert!(hne("generate --dataset 3d-cluster --out c.csv", dir.path())
        .status
        .success());
    let meta = read_json(&dir.path().join("c.meta.json"));
    assert_eq!(meta["params"]["n"], 300);
    assert_eq!(meta["params"]["bridge_points"], 36);
    assert_eq!(meta["labels"].as_array().unwrap().len(), 300);

    assert!(hne("generate --dataset 2-surfaces --out s.csv", dir.path())
        .status
        .success());
    assert_eq!(read_csv(&dir.path().join("s.csv")).len(), 150);
}

#[test]
fn unknown_dataset_is_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    let out = hne("generate --dataset moebius --out x.csv", dir.path());
    assert_eq!(out.status.code(), Some(2));
    let msg = stderr(&out);
    for name in ["swiss-roll", "swiss-hole", "3d-cluster", "2-surfaces"] {
        assert!(msg.contains(name), "{msg}");
    }
}

#[test]
fn embed_rhne_output_is_orthonormal() {
    let dir = tempfile::tempdir().unwrap();
    hne(
        "generate --dataset swiss-roll --n 1000 --seed 1 --out sr.csv",
        dir.path(),
    );
    let out = hne("embed --input sr.csv --method rhne --k 5 --d 2 --out y.csv", dir.path());
    assert!(out.status.success(), "{}", stderr(&out));
    let y = read_csv(&dir.path().join("y.csv"));
    assert_eq!(y.len(), 1000);
    for a in 0..2 {
        for b in 0..2 {
            let dot: f64 = y.iter().map(|r| r[a] * r[b]).sum();
            let want = if a == b { 1.0 } else { 0.0 };
            assert!((dot - want).abs() < 1e-8, "({a},{b}) = {dot}");
        }
    }
    let diag = read_json(&dir.path().join("y.diagnostics.json"));
    assert!(diag["null_vector_check"].as_f64().unwrap() <= 1e-8);
    assert_eq!(diag["eigenvalues"].as_array().unwrap().len(), 2);
    assert_eq!(diag["params"]["variant"], "rhne");
    assert!(diag["residuals"]["mean_hierarchic"].is_number());
}

#[test]
fn embed_bhne_with_single_neighbor() {
    let dir = tempfile::tempdir().unwrap();
    write_small(&dir.path().join("small.csv"));
    let out = hne(
        "embed --input small.csv --method bhne --k 1 --d 1 --out y.csv",
        dir.path(),
    );
    assert!(out.status.success(), "{}", stderr(&out));
    assert_eq!(read_csv(&dir.path().join("y.csv")).len(), 10);
    let diag = read_json(&dir.path().join("y.diagnostics.json"));
    assert!(diag["constraint_violation"].as_f64().unwrap() < 1e-12);
}

#[test]
fn embed_argument_errors() {
    let dir = tempfile::tempdir().unwrap();
    write_small(&dir.path().join("small.csv"));
    let zero_k = hne(
        "embed --input small.csv --method lle --k 0 --d 1 --out y.csv",
        dir.path(),
    );
    assert_eq!(zero_k.status.code(), Some(2));
    let bad_method = hne(
        "embed --input small.csv --method pca --k 2 --d 1 --out y.csv",
        dir.path(),
    );
    assert_eq!(bad_method.status.code(), Some(2));
    let big_k = hne(
        "embed --input small.csv --method lle --k 10 --d 1 --out y.csv",
        dir.path(),
    );
    assert_eq!(big_k.status.code(), Some(1));
    assert!(stderr(&big_k).contains("k = 10"));
    let missing = hne(
        "embed --input nope.csv --method lle --k 2 --d 1 --out y.csv",
        dir.path(),
    );
    assert_eq!(missing.status.code(), Some(1));
}

#[test]
fn embed_is_deterministic_and_exports_graphs() {
    let dir = tempfile::tempdir().unwrap();
    hne("generate --dataset 2-surfaces --seed 3 --out s.csv", dir.path());
    let run = |name: &str| {
        let cmd =
            format!("embed --input s.csv --method bhne --k 6 --d 2 --out {name} --emit-edges edges.csv --dump-g g.txt");
        let out = hne(&cmd, dir.path());
        assert!(out.status.success(), "{}", stderr(&out));
        fs::read(dir.path().join(name)).unwrap()
    };
    assert_eq!(run("a.csv"), run("b.csv"));
    let edges = fs::read_to_string(dir.path().join("edges.csv")).unwrap();
    assert!(edges.lines().all(|l| {
        let (a, b) = l.split_once(',').unwrap();
        a.parse::<usize>().unwrap() < b.parse::<usize>().unwrap()
    }));
    let g = fs::read_to_string(dir.path().join("g.txt")).unwrap();
    assert!(g.lines().all(|l| l.split_whitespace().count() == 3));
}

#[test]
fn evaluate_single_cell() {
    let dir = tempfile::tempdir().unwrap();
    write_small(&dir.path().join("small.csv"));
    let out = hne(
        "evaluate --input small.csv --methods rhne --k-list 3 --out report.json",
        dir.path(),
    );
    assert!(out.status.success(), "{}", stderr(&out));
    let report = read_json(&dir.path().join("report.json"));
    let cells = report["results"].as_array().unwrap();
    assert_eq!(cells.len(), 1);
    assert_eq!(cells[0]["method"], "rhne");
    assert_eq!(cells[0]["k"], 3);
    assert!(cells[0]["reconstruction_error"].as_f64().unwrap() >= 0.0);
    let table = String::from_utf8(out.stdout).unwrap();
    assert!(table.contains("RHNE") && table.contains("k=3"));
}

#[test]
fn evaluate_with_intrinsic_adds_quality_columns() {
    let dir = tempfile::tempdir().unwrap();
    hne("generate --dataset swiss-roll --n 200 --out sr.csv", dir.path());
    let meta = read_json(&dir.path().join("sr.meta.json"));
    let truth: String = meta["intrinsic"]
        .as_array()
        .unwrap()
        .iter()
        .map(|q| format!("{},{}\n", q[0], q[1]))
        .collect();
    fs::write(dir.path().join("truth.csv"), truth).unwrap();
    let out = hne(
        "evaluate --input sr.csv --methods lle,ihne --k-list 6,8 --intrinsic truth.csv --out report.json",
        dir.path(),
    );
    assert!(out.status.success(), "{}", stderr(&out));
    let report = read_json(&dir.path().join("report.json"));
    let cells = report["results"].as_array().unwrap();
    assert_eq!(cells.len(), 4);
    for c in cells {
        let t = c["trustworthiness"].as_f64().unwrap();
        assert!((0.0..=1.0).contains(&t));
        assert!(c["knn_preservation"].is_number());
    }
}

#[test]
fn image_directory_input_is_scaled() {
    let dir = tempfile::tempdir().unwrap();
    let imgs = dir.path().join("imgs");
    fs::create_dir(&imgs).unwrap();
    // Binary PGM: 2x2 gray images with distinct intensities.
    for i in 0..6u8 {
        let mut bytes = b"P5\n2 2\n255\n".to_vec();
        bytes.extend([i * 40, 255 - i * 30, i * i, 100 + i]);
        fs::write(imgs.join(format!("f{i:02}.pgm")), bytes).unwrap();
    }
    let run = |extra: &str, out: &str| {
        let o = hne(
            &format!("embed --input imgs --method lle --k 3 --d 1 --out {out} {extra}"),
            dir.path(),
        );
        assert!(o.status.success(), "{}", stderr(&o));
        read_json(&dir.path().join(out).with_extension("diagnostics.json"))
    };
    let scaled = run("", "a.csv");
    let raw = run("--raw-pixels", "b.csv");
    assert_eq!(scaled["dim"], 4);
    assert_eq!(raw["raw_pixels"], true);
    let (rs, rr) = (
        scaled["residuals"]["mean_inner"].as_f64().unwrap(),
        raw["residuals"]["mean_inner"].as_f64().unwrap(),
    );
    assert!((rr / rs - 255.0).abs() < 1e-6, "{rr} vs {rs}");
}
