use std::path::Path;
use std::process::{Command, Output};

use analog_dist::catalog::load_catalog;
use analog_dist_cli::manifest::load_manifest;
use analog_dist_cli::output::parse_table;

fn run(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_analog-dist"))
        .args(args)
        .current_dir(dir)
        .env("ANALOG_DIST_THREADS", "1")
        .output()
        .expect("binary runs")
}

fn ok(dir: &Path, args: &[&str]) -> String {
    let out = run(dir, args);
    assert!(out.status.success(), "{args:?} failed: {}", String::from_utf8_lossy(&out.stderr));
    String::from_utf8(out.stdout).unwrap()
}

fn rows(path: &Path) -> usize {
    let text = std::fs::read_to_string(path).unwrap();
    parse_table(&text).unwrap().1.len()
}

fn l63(dir: &Path, name: &str, n: &str) {
    ok(dir, &["gen-l63", "--out", name, "--n", n, "--stride", "10"]);
}

#[test]
fn gen_l63_writes_catalog_and_is_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let stdout = ok(dir.path(), &["gen-l63", "--out", "a.anacat", "--n", "1000"]);
    assert!(stdout.contains("L = 1000, D = 3"), "{stdout}");
    ok(dir.path(), &["gen-l63", "--out", "b.anacat", "--n", "1e3"]);
    let a = std::fs::read(dir.path().join("a.anacat")).unwrap();
    let b = std::fs::read(dir.path().join("b.anacat")).unwrap();
    assert_eq!(a, b);
    let c = load_catalog(dir.path().join("a.anacat")).unwrap();
    assert_eq!((c.len(), c.dim()), (1000, 3));
    assert!(dir.path().join("a.anacat.manifest.json").exists());
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(run(dir.path(), &["gen-l63", "--out", "x", "--dt", "10"]).status.code(), Some(3));
    assert_eq!(run(dir.path(), &["fit-target", "--catalog", "missing", "--out", "f"]).status.code(), Some(4));
    assert_eq!(run(dir.path(), &["gen-l63", "--out", "x", "--bogus"]).status.code(), Some(2));
    assert_eq!(run(dir.path(), &["gen-l63", "--out", "x", "--n", "0"]).status.code(), Some(2));
    assert_eq!(run(dir.path(), &["cluster", "--catalog", "x", "--out", "c", "--candidates", "5..2"]).status.code(), Some(2));
}

#[test]
fn rerun_reproduces_outputs() {
    let dir = tempfile::tempdir().unwrap();
    l63(dir.path(), "c.anacat", "3000");
    ok(dir.path(), &["fit-target", "--catalog", "c.anacat", "--out", "fit", "--K", "30", "--exclusion-gap", "2"]);
    ok(dir.path(), &["rerun", "--manifest", "fit/manifest.json", "--out", "fit2", "--verify"]);
    let a = load_manifest(&dir.path().join("fit/manifest.json")).unwrap();
    let b = load_manifest(&dir.path().join("fit2/manifest.json")).unwrap();
    assert_eq!(a.outputs, b.outputs);
    assert_eq!(a.command, "fit-target");
    assert_eq!(rows(&dir.path().join("fit/fit.csv")), 30);

    // a tampered output is caught
    std::fs::write(dir.path().join("fit/manifest.json"), {
        let mut m = a.clone();
        m.outputs[0].fnv1a = "0".into();
        serde_json::to_string(&m).unwrap()
    })
    .unwrap();
    assert_eq!(run(dir.path(), &["rerun", "--manifest", "fit/manifest.json", "--out", "fit3", "--verify"]).status.code(), Some(2));
}

#[test]
fn theory_curves() {
    let dir = tempfile::tempdir().unwrap();
    ok(dir.path(), &["theory-curves", "--out", "t", "--k-list", "1,5", "--d-list", "2,5", "--points", "50"]);
    assert_eq!(rows(&dir.path().join("t/curves.csv")), 4 * 50);
    assert_eq!(rows(&dir.path().join("t/markers.csv")), 4);
    assert!(std::fs::read_to_string(dir.path().join("t/curves.svg")).unwrap().starts_with("<svg"));
}

#[test]
fn mc_distances_small() {
    let dir = tempfile::tempdir().unwrap();
    l63(dir.path(), "src.anacat", "20000");
    ok(
        dir.path(),
        &[
            "mc-distances", "--catalog-source", "src.anacat", "--out", "mc", "--L-list", "2000,5000", "--n-catalogs", "10",
            "--target", "10000", "--K-dim", "40", "--k-list", "1,5", "--exclusion-gap", "10",
        ],
    );
    assert_eq!(rows(&dir.path().join("mc/samples.csv")), 2 * 10 * 2);
    assert_eq!(rows(&dir.path().join("mc/ks.csv")), 2 * 2);
    assert_eq!(rows(&dir.path().join("mc/rho_overlap.csv")), 1);
}

#[test]
fn analysis_commands_on_small_catalogs() {
    let dir = tempfile::tempdir().unwrap();
    l63(dir.path(), "c.anacat", "5000");
    ok(dir.path(), &["rescaled-density", "--catalog", "c.anacat", "--out", "rd", "--k-max", "3", "--K", "30", "--n-targets", "40"]);
    assert!(rows(&dir.path().join("rd/summary.csv")) == 3);
    ok(dir.path(), &["dim-stats", "--catalog", "c.anacat", "--out", "ds", "--n-targets", "50", "--bins", "10", "--exclusion-gap", "2"]);
    assert_eq!(rows(&dir.path().join("ds/histogram.csv")), 10);

    ok(
        dir.path(),
        &["gen-surrogate", "--out", "s.anacat", "--modes", "3", "--grid", "16", "--n", "3000", "--seed", "4"],
    );
    ok(
        dir.path(),
        &[
            "dmax-scan", "--catalog", "s.anacat", "--out", "dm", "--k-list", "1,4", "--eof-counts", "1..4", "--n-targets", "20",
            "--n-pairs", "2000", "--K", "30",
        ],
    );
    assert_eq!(rows(&dir.path().join("dm/boundary.csv")), 2);
    ok(dir.path(), &["cluster", "--catalog", "s.anacat", "--out", "cl", "--n-eof", "4", "--candidates", "1..3", "--seeds", "2"]);
    assert_eq!(rows(&dir.path().join("cl/labels.csv")), 16);
    assert_eq!(rows(&dir.path().join("cl/bic_curve.csv")), 3);
}
