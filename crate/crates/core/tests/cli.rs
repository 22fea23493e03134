use std::path::Path;
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_photo-profile"))
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn ok(args: &[&str]) -> Output {
    let out = run(args);
    assert!(
        out.status.success(),
        "{args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    out
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

#[test]
fn missing_file_exits_with_io_code() {
    let out = run(&["profile", "/nonexistent/gallery.jsonl"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn invalid_gallery_exits_with_validation_code() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.jsonl");
    std::fs::write(&path, "{\"not\": \"a header\"}\n").unwrap();
    let out = run(&["profile", p(&path)]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("line 1"));
}

#[test]
fn bad_config_exits_with_validation_code() {
    let dir = tempfile::tempdir().unwrap();
    let gallery = dir.path().join("g.jsonl");
    ok(&["gen-synthetic", "fixture", "--out", p(&gallery)]);
    let config = dir.path().join("c.toml");
    std::fs::write(&config, "[video]\nstride = 7\n").unwrap();
    let out = run(&["profile", p(&gallery), "--config", p(&config)]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn route_prints_audit_log() {
    let dir = tempfile::tempdir().unwrap();
    let gallery = dir.path().join("g.jsonl");
    ok(&["gen-synthetic", "fixture", "--out", p(&gallery)]);
    let out = ok(&["route", p(&gallery), "--allow-public"]);
    let text = String::from_utf8(out.stdout).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines.len(), 14);
    assert_eq!(lines[5], "r06\tprivate\tsensitive_text");
    assert_eq!(lines[6], "r07\tpublic\t-");
    assert_eq!(lines[12], "v1\tprivate\tportrait");
    assert_eq!(lines[13], "v2\tpublic\t-");

    let forced = String::from_utf8(ok(&["route", p(&gallery)]).stdout).unwrap();
    assert!(forced
        .lines()
        .all(|l| l.contains("\tprivate\t") && l.contains("forced_private")));
}

#[test]
fn profile_writes_report_file() {
    let dir = tempfile::tempdir().unwrap();
    let gallery = dir.path().join("g.jsonl");
    let report = dir.path().join("r.json");
    ok(&[
        "gen-synthetic",
        "gallery",
        "--out",
        p(&gallery),
        "--count",
        "40",
    ]);
    ok(&["profile", p(&gallery), "--out", p(&report)]);
    let json: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(&report).unwrap()).unwrap();
    assert!(json["category_counters"].is_object());
    assert_eq!(json["routing_stats"][1], 0);
    let text = ok(&["profile", p(&gallery), "--format", "text", "--top-k", "3"]);
    assert!(String::from_utf8(text.stdout)
        .unwrap()
        .contains("Top 3 categories"));
}

#[test]
fn demography_reports_owner() {
    let dir = tempfile::tempdir().unwrap();
    let gallery = dir.path().join("g.jsonl");
    ok(&["gen-synthetic", "fixture", "--out", p(&gallery)]);
    let out = ok(&["demography", p(&gallery)]);
    let json: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(json["owner"], 0);
    assert_eq!(json["clusters"].as_array().unwrap().len(), 3);
}

#[test]
fn fusion_train_and_eval() {
    let dir = tempfile::tempdir().unwrap();
    let gallery = dir.path().join("f.jsonl");
    let labels = dir.path().join("f.labels.tsv");
    let model = dir.path().join("fusion.json");
    ok(&[
        "gen-synthetic",
        "fusion",
        "--out",
        p(&gallery),
        "--count",
        "200",
    ]);
    assert!(labels.exists());
    let out = ok(&[
        "train-fusion",
        p(&gallery),
        "--labels",
        p(&labels),
        "--out",
        p(&model),
        "--grid-step",
        "0.25",
    ]);
    let fit: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(fit["grid_points"], 15);
    assert!(fit["validation_accuracy"].as_f64().unwrap() > 0.9);
    let eval = ok(&[
        "eval-fusion",
        p(&model),
        p(&gallery),
        "--labels",
        p(&labels),
    ]);
    let report: serde_json::Value = serde_json::from_slice(&eval.stdout).unwrap();
    assert!(report["fused_accuracy"].as_f64().unwrap() > 0.9);
    assert_eq!(report["samples"], 200);
}

#[test]
fn aggregator_train_and_predict() {
    let dir = tempfile::tempdir().unwrap();
    let users = dir.path().join("users.jsonl");
    let model = dir.path().join("agg.json");
    ok(&[
        "gen-synthetic",
        "users",
        "--out",
        p(&users),
        "--count",
        "40",
    ]);
    ok(&[
        "train-aggregator",
        p(&users),
        "--out",
        p(&model),
        "--reduced-dim",
        "8",
        "--epochs",
        "5",
    ]);
    let out = ok(&["predict-profile", p(&model), p(&users), "--top-k", "3"]);
    let text = String::from_utf8(out.stdout).unwrap();
    assert_eq!(text.lines().count(), 40);
    let first: serde_json::Value = serde_json::from_str(text.lines().next().unwrap()).unwrap();
    assert_eq!(first["top_k"].as_array().unwrap().len(), 3);
    assert!(String::from_utf8_lossy(&out.stderr).contains("top-3"));

    let too_many = run(&["predict-profile", p(&model), p(&users), "--top-k", "9"]);
    assert_eq!(too_many.status.code(), Some(1));
    let too_wide = run(&[
        "train-aggregator",
        p(&users),
        "--out",
        p(&model),
        "--reduced-dim",
        "40",
    ]);
    assert_eq!(too_wide.status.code(), Some(1));
}

#[test]
fn generated_config_is_accepted() {
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("c.toml");
    let gallery = dir.path().join("g.jsonl");
    ok(&["gen-synthetic", "config", "--out", p(&config)]);
    ok(&["gen-synthetic", "fixture", "--out", p(&gallery)]);
    let a = ok(&["profile", p(&gallery), "--config", p(&config)]).stdout;
    let b = ok(&["profile", p(&gallery)]).stdout;
    assert_eq!(a, b);
}
