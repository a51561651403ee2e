//! End-to-end runs of the `mmtrack` binary.

use std::path::Path;
use std::process::{Command, Output};

fn mmtrack(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_mmtrack")).args(args).output().unwrap()
}

fn ok(out: Output) -> String {
    assert!(out.status.success(), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    String::from_utf8(out.stdout).unwrap()
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn synth_track_eval_on_noiseless_scene() {
    let dir = tempfile::tempdir().unwrap();
    let scene = dir.path().join("scene.jsonl");
    let tracks = dir.path().join("tracks.jsonl");
    let report = dir.path().join("report.json");
    ok(mmtrack(&["synth", "--preset", "noiseless", "--out", s(&scene)]));
    ok(mmtrack(&["track", "--scene", s(&scene), "--out", s(&tracks)]));
    let text = ok(mmtrack(&[
        "eval",
        "--tracks",
        s(&tracks),
        "--scene",
        s(&scene),
        "--amota",
        "--out",
        s(&report),
    ]));
    assert!(text.contains("AMOTA"));

    let json: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&report).unwrap()).unwrap();
    assert_eq!(json["overall"]["mota"], 1.0);
    assert_eq!(json["overall"]["ids"], 0);
    let amota = json["amota"].as_f64().unwrap();
    assert!(amota > 0.0 && amota <= 1.0);

    let again = dir.path().join("again.jsonl");
    ok(mmtrack(&["track", "--scene", s(&scene), "--out", s(&again)]));
    assert_eq!(std::fs::read(&tracks).unwrap(), std::fs::read(&again).unwrap());
}

#[test]
fn curves_are_written_as_tsv() {
    let dir = tempfile::tempdir().unwrap();
    ok(mmtrack(&["curves", "--out", s(dir.path()), "--frames", "10"]));
    let dw = std::fs::read_to_string(dir.path().join("dw_scores.tsv")).unwrap();
    let rows: Vec<&str> = dw.lines().collect();
    assert_eq!(rows.len(), 11);
    assert!(rows[1].starts_with("0\t1.000000\t"));
    let dbse = std::fs::read_to_string(dir.path().join("dbse_weights.tsv")).unwrap();
    assert!(dbse.lines().count() > 2);
}

#[test]
fn sweep_reports_each_grid_point() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("sweep.json");
    ok(mmtrack(&[
        "sweep",
        "--preset",
        "benchmark",
        "--count",
        "4",
        "--sweep-grid",
        "dw=on,off",
        "--out",
        s(&out),
    ]));
    let rows: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&out).unwrap()).unwrap();
    let rows = rows.as_array().unwrap();
    assert_eq!(rows.len(), 2);
    let fn_of = |on: bool| {
        rows.iter()
            .find(|r| r["settings"]["dw"] == on)
            .map(|r| r["metrics"]["fn"].as_u64().unwrap())
            .unwrap()
    };
    assert!(fn_of(true) <= fn_of(false));
}

#[test]
fn failures_map_to_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let missing = dir.path().join("missing.jsonl");
    let out = dir.path().join("t.jsonl");
    let r = mmtrack(&["track", "--scene", s(&missing), "--out", s(&out)]);
    assert_eq!(r.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&r.stderr).starts_with("mmtrack: "));

    let scene = dir.path().join("scene.jsonl");
    ok(mmtrack(&["synth", "--preset", "noiseless", "--out", s(&scene)]));
    let config = dir.path().join("bad.toml");
    std::fs::write(&config, "[tracker]\nassignment = \"auction\"\n").unwrap();
    let r = mmtrack(&["track", "--scene", s(&scene), "--config", s(&config), "--out", s(&out)]);
    assert_eq!(r.status.code(), Some(2));

    let r = mmtrack(&["synth", "--preset", "nowhere", "--out", s(&out)]);
    assert_eq!(r.status.code(), Some(2));

    let r = mmtrack(&["track", "--frobnicate"]);
    assert!(!r.status.success());
}
