use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;
use tempfile::TempDir;

fn run(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_codegemm"))
        .current_dir(dir)
        .env("CODEGEMM_THREADS", "2")
        .args(args)
        .output()
        .unwrap()
}

fn ok_json(dir: &Path, args: &[&str]) -> Value {
    let out = run(dir, args);
    assert!(
        out.status.success(),
        "{args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    serde_json::from_slice(&out.stdout).unwrap()
}

fn error_kind(out: &Output) -> String {
    assert_eq!(out.status.code(), Some(1));
    let v: Value = serde_json::from_slice(&out.stderr).unwrap();
    v["error"]["kind"].as_str().unwrap().to_string()
}

#[test]
fn quantize_small_geometry() {
    let dir = TempDir::new().unwrap();
    let v = ok_json(
        dir.path(),
        &["quantize", "--rows", "4", "--cols", "32", "--v", "8", "--m", "1", "--b", "2", "--g", "16", "--out", "l.cgmm"],
    );
    assert_eq!(v["bits"]["total_bits"], "672");
    // header + 8 scales + 4x8 centroids + 16 two-bit codes
    let len = std::fs::metadata(dir.path().join("l.cgmm")).unwrap().len();
    assert_eq!(len, 45 + 16 + 64 + 4);
}

#[test]
fn quantize_rejects_bad_schemes() {
    let dir = TempDir::new().unwrap();
    let out = run(
        dir.path(),
        &["quantize", "--rows", "4", "--cols", "32", "--v", "3", "--m", "1", "--b", "2", "--g", "-1", "--out", "a"],
    );
    assert_eq!(error_kind(&out), "config");
    let out = run(
        dir.path(),
        &["quantize", "--rows", "4", "--cols", "32", "--v", "16", "--m", "1", "--b", "2", "--g", "8", "--out", "a"],
    );
    assert_eq!(error_kind(&out), "config");
    let out = run(dir.path(), &["quantize", "--v", "4", "--m", "1", "--b", "2", "--g", "-1", "--out", "a"]);
    assert_eq!(error_kind(&out), "config");
    assert!(!dir.path().join("a").exists());
}

#[test]
fn usage_errors_exit_2() {
    let dir = TempDir::new().unwrap();
    assert_eq!(run(dir.path(), &["bits", "--v", "4", "--m", "1", "--b", "8", "--g", "-1"]).status.code(), Some(2));
    assert_eq!(
        run(dir.path(), &["gemm", "--layer", "a", "--x", "b", "--engine", "bogus", "--out", "c"]).status.code(),
        Some(2)
    );
    assert_eq!(run(dir.path(), &["nonsense"]).status.code(), Some(2));
}

#[test]
fn gemm_engines_agree_and_count() {
    let dir = TempDir::new().unwrap();
    let d = dir.path();
    ok_json(
        d,
        &["quantize", "--rows", "64", "--cols", "128", "--v", "8", "--m", "2", "--b", "4", "--g", "32", "--iters", "5", "--out", "l.cgmm"],
    );
    ok_json(d, &["random", "--rows", "128", "--cols", "3", "--seed", "4", "--out", "x.cgt"]);
    let cg = ok_json(
        d,
        &["gemm", "--layer", "l.cgmm", "--x", "x.cgt", "--engine", "codegemm", "--tw", "32", "--th", "16", "--counters", "--out", "y1.cgt"],
    );
    ok_json(d, &["gemm", "--layer", "l.cgmm", "--x", "x.cgt", "--engine", "dequant-mirrored", "--out", "y2.cgt"]);
    assert_eq!(std::fs::read(d.join("y1.cgt")).unwrap(), std::fs::read(d.join("y2.cgt")).unwrap());

    assert_eq!(cg["read_dense_ratio"], 0.25);
    assert_eq!(cg["mac_build"], 2 * 16 * 128 * 3);
    assert_eq!(cg["mac_read_adds"], 2 * 64 * (128 / 8) * 3);

    ok_json(d, &["gemm", "--layer", "l.cgmm", "--x", "x.cgt", "--engine", "dense", "--out", "y3.cgt"]);
    let e = ok_json(d, &["error", "--reference", "y3.cgt", "--approx", "y1.cgt"]);
    assert!(e["relative_error"].as_f64().unwrap() < 1e-3);

    let out = run(d, &["gemm", "--layer", "x.cgt", "--x", "x.cgt", "--engine", "codegemm", "--out", "y4.cgt"]);
    assert_eq!(error_kind(&out), "bad_magic");
}

#[test]
fn reconstruct_matches_quantize_error() {
    let dir = TempDir::new().unwrap();
    let d = dir.path();
    ok_json(d, &["random", "--rows", "16", "--cols", "64", "--seed", "2", "--out", "w.cgt"]);
    let q = ok_json(
        d,
        &["quantize", "--input", "w.cgt", "--v", "4", "--m", "2", "--b", "4", "--g", "-1", "--seed", "9", "--out", "l.cgmm"],
    );
    ok_json(d, &["reconstruct", "--layer", "l.cgmm", "--out", "w_hat.cgt"]);
    let e = ok_json(d, &["error", "--reference", "w.cgt", "--approx", "w_hat.cgt"]);
    assert_eq!(q["relative_error"], e["relative_error"]);
}

#[test]
fn quantize_is_deterministic() {
    let dir = TempDir::new().unwrap();
    let d = dir.path();
    let args = |out: &'static str| {
        ["quantize", "--rows", "32", "--cols", "64", "--v", "4", "--m", "2", "--b", "5", "--g", "16", "--seed", "3", "--out", out]
    };
    ok_json(d, &args("a.cgmm"));
    let out = Command::new(env!("CARGO_BIN_EXE_codegemm"))
        .current_dir(d)
        .env("CODEGEMM_THREADS", "1")
        .args(args("b.cgmm"))
        .output()
        .unwrap();
    assert!(out.status.success());
    assert_eq!(std::fs::read(d.join("a.cgmm")).unwrap(), std::fs::read(d.join("b.cgmm")).unwrap());
}

#[test]
fn bits_rows_and_search() {
    let dir = TempDir::new().unwrap();
    let d = dir.path();
    for (v, m, g, q_bar) in [("4", "1", "-1", "2.005"), ("8", "2", "-1", "2.008"), ("8", "1", "16", "2.002"), ("16", "3", "32", "2.012")] {
        let r = ok_json(
            d,
            &["bits", "--v", v, "--m", m, "--b", "8", "--g", g, "--rows", "4096", "--cols", "4096"],
        );
        assert_eq!(r["rounded"]["q_bar"], q_bar);
    }
    let r = ok_json(d, &["bits", "--rows", "4096", "--cols", "4096", "--target", "2.0", "--tol", "0.02"]);
    let configs = r["configs"].as_array().unwrap();
    assert!(configs.len() >= 5);
    let q: Vec<f64> = configs.iter().map(|c| c["q_bar"].as_f64().unwrap()).collect();
    assert!(q.windows(2).all(|p| p[0] <= p[1]));
    assert!(q.iter().all(|x| (x - 2.0).abs() <= 0.02));
}

#[test]
fn predict_reports_ratios() {
    let dir = TempDir::new().unwrap();
    let r = ok_json(
        dir.path(),
        &["predict", "--v", "4", "--m", "1", "--b", "8", "--g", "128", "--rows", "4096", "--cols", "4096", "--n", "8"],
    );
    assert_eq!(r["prediction"]["reduction_factor"], 0.25);
    assert_eq!(r["prediction"]["build_fraction"], 0.2);
    assert_eq!(r["prediction"]["psumbook_entries_per_tile"], 2048);
}

fn read_csv(path: &Path) -> Vec<csv::StringRecord> {
    let mut rdr = csv::Reader::from_path(path).unwrap();
    let header = rdr.headers().unwrap().clone();
    assert_eq!(&header[0], "M");
    assert_eq!(&header[3], "engine");
    rdr.records().map(|r| r.unwrap()).collect()
}

#[test]
fn bench_custom_csv_suite() {
    let dir = TempDir::new().unwrap();
    let d = dir.path();
    std::fs::write(d.join("shapes.csv"), "M,N,K\n1,256,512\n2,128,256\n").unwrap();
    let r = ok_json(
        d,
        &["bench", "--suite", "shapes.csv", "--engines", "codegemm,dequant,dense", "--repeats", "2", "--warmup", "0", "--tw", "32", "--th", "64", "--out", "b.csv"],
    );
    assert_eq!(r["rows"], 6);
    let rows = read_csv(&d.join("b.csv"));
    assert_eq!(rows.len(), 6);
    for row in &rows {
        let build_fraction = &row[17];
        match &row[3] {
            "codegemm" => assert!(!build_fraction.is_empty()),
            _ => assert!(build_fraction.is_empty()),
        }
    }
    let out = run(d, &["bench", "--suite", "nope", "--repeats", "1"]);
    assert_eq!(error_kind(&out), "unknown_suite");
}

#[test]
fn sweep_counters_ignore_tile_height() {
    let dir = TempDir::new().unwrap();
    let d = dir.path();
    ok_json(
        d,
        &["sweep", "--shapes", "1x256x1024", "--engines", "codegemm", "--tw", "32,64,128", "--th", "16,64", "--repeats", "1", "--warmup", "0", "--out", "s.csv"],
    );
    let rows = read_csv(&d.join("s.csv"));
    assert_eq!(rows.len(), 6);
    for row in &rows {
        assert_eq!(&row[13], "262144");
        assert_eq!(&row[14], "65536");
    }
}
