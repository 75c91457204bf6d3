use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;
use tempfile::TempDir;

fn egosum(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_egosum"))
        .args(args)
        .current_dir(dir)
        .output()
        .expect("binary runs")
}

fn ok(dir: &Path, args: &[&str]) -> String {
    let out = egosum(dir, args);
    assert!(out.status.success(), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
    String::from_utf8(out.stdout).unwrap()
}

fn dataset() -> (TempDir, PathBuf) {
    let dir = tempfile::tempdir().unwrap();
    ok(dir.path(), &["synth", "--events", "3", "--frames", "12-20", "--clusters", "3-4", "--dim", "4", "--seed", "5", "--out", "d.jsonl"]);
    let path = dir.path().join("d.jsonl");
    (dir, path)
}

fn json(path: &Path) -> Value {
    serde_json::from_slice(&fs::read(path).unwrap()).unwrap()
}

#[test]
fn validate_accepts_generated_data() {
    let (dir, _) = dataset();
    let out = ok(dir.path(), &["validate", "d.jsonl"]);
    assert!(out.starts_with("ok: 3 events"), "{out}");
}

#[test]
fn validate_lists_violations_and_fails() {
    let (dir, path) = dataset();
    let text = fs::read_to_string(&path).unwrap();
    let broken = text.replacen("\"informativeness\":0.", "\"informativeness\":1.", 1);
    assert_ne!(broken, text);
    fs::write(dir.path().join("bad.jsonl"), broken).unwrap();
    let out = egosum(dir.path(), &["validate", "bad.jsonl"]);
    assert_eq!(out.status.code(), Some(1));
    let listed = String::from_utf8(out.stdout).unwrap();
    assert!(listed.contains("informativeness"), "{listed}");
}

#[test]
fn usage_errors_exit_two() {
    let (dir, _) = dataset();
    assert_eq!(egosum(dir.path(), &["summarize"]).status.code(), Some(2));
    assert_eq!(egosum(dir.path(), &["filter", "d.jsonl", "--threshold", "1.5"]).status.code(), Some(2));
    assert_eq!(
        egosum(dir.path(), &["summarize", "d.jsonl", "--fraction", "0.2", "--length", "3"]).status.code(),
        Some(2)
    );
    assert_eq!(egosum(dir.path(), &["rank", "d.jsonl", "--criterion", "colour"]).status.code(), Some(2));
}

#[test]
fn missing_input_exits_one() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(egosum(dir.path(), &["summarize", "nope.jsonl"]).status.code(), Some(1));
}

#[test]
fn filter_writes_one_row_per_frame() {
    let (dir, path) = dataset();
    let frames = fs::read_to_string(&path).unwrap().lines().filter(|l| l.contains("\"frame_id\"")).count();
    let csv = ok(dir.path(), &["filter", "d.jsonl", "--threshold", "0.5"]);
    let mut lines = csv.lines();
    assert_eq!(lines.next(), Some("event_id,frame_id,informativeness,kept"));
    assert_eq!(lines.count(), frames);
}

#[test]
fn sweep_header_and_rows() {
    let (dir, _) = dataset();
    let csv = ok(dir.path(), &["sweep", "d.jsonl", "--thresholds", "0,0.05,0.5"]);
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(lines[0], "threshold,tp,fp,fn,tn,accuracy,precision,recall,f_measure");
    assert_eq!(lines.len(), 4);
    // everything is kept at zero, so recall is one
    assert_eq!(lines[1].split(',').nth(7), Some("1"));
    assert_eq!(ok(dir.path(), &["sweep", "d.jsonl", "--step", "0.25"]).lines().count(), 6);
}

#[test]
fn rank_emits_every_kept_frame() {
    let (dir, _) = dataset();
    for criterion in ["saliency", "objects", "faces", "fused"] {
        let csv = ok(dir.path(), &["rank", "d.jsonl", "--criterion", criterion]);
        let mut lines = csv.lines();
        assert_eq!(lines.next(), Some("frame_id,criterion,raw_score,rank,normalized"));
        let rows: Vec<&str> = lines.collect();
        assert!(!rows.is_empty());
        assert!(rows.iter().all(|r| r.split(',').nth(1) == Some(criterion)), "{criterion}");
    }
}

#[test]
fn summary_json_shape() {
    let (dir, _) = dataset();
    ok(dir.path(), &["summarize", "d.jsonl", "--length", "3", "--out", "s.json", "--report", "r.json", "--curves", "c.csv"]);
    let s = json(&dir.path().join("s.json"));
    let arr = s.as_array().unwrap();
    assert_eq!(arr.len(), 3);
    for e in arr {
        for key in ["event_id", "selected", "presentation_order", "trace"] {
            assert!(e.get(key).is_some(), "missing {key}");
        }
        assert_eq!(e["selected"].as_array().unwrap().len(), 3);
        assert_eq!(e["trace"].as_array().unwrap().len(), 3);
    }
    let r = json(&dir.path().join("r.json"));
    assert!(r["msms"]["auc"].as_f64().is_some());
    assert_eq!(r["per_event"].as_array().unwrap().len(), 3);
    let curves = fs::read_to_string(dir.path().join("c.csv")).unwrap();
    assert!(curves.starts_with("id,fraction,value\n"));
    assert!(curves.contains("\nmsms/uniform,"));
}

#[test]
fn flags_override_config_file() {
    let (dir, _) = dataset();
    fs::write(dir.path().join("run.conf"), "# lengths\nlength = 2\nnovelty = false\n").unwrap();
    ok(dir.path(), &["--config", "run.conf", "summarize", "d.jsonl", "--out", "a.json"]);
    ok(dir.path(), &["--config", "run.conf", "summarize", "d.jsonl", "--length", "4", "--out", "b.json"]);
    let len = |f: &str| json(&dir.path().join(f))[0]["selected"].as_array().unwrap().len();
    assert_eq!(len("a.json"), 2);
    assert_eq!(len("b.json"), 4);

    fs::write(dir.path().join("bad.conf"), "colour = red\n").unwrap();
    assert_eq!(egosum(dir.path(), &["--config", "bad.conf", "summarize", "d.jsonl"]).status.code(), Some(2));
}

#[test]
fn evaluate_with_separate_ground_truth() {
    let (dir, path) = dataset();
    let text = fs::read_to_string(&path).unwrap();
    let (gt, frames): (Vec<&str>, Vec<&str>) = text.lines().partition(|l| l.contains("\"gt\""));
    fs::write(dir.path().join("frames.jsonl"), frames.join("\n")).unwrap();
    fs::write(dir.path().join("gt.jsonl"), gt.join("\n")).unwrap();

    assert_eq!(egosum(dir.path(), &["evaluate", "frames.jsonl"]).status.code(), Some(1));
    ok(dir.path(), &["evaluate", "frames.jsonl", "--gt", "gt.jsonl", "--out", "split.json"]);
    ok(dir.path(), &["evaluate", "d.jsonl", "--out", "joined.json"]);
    assert_eq!(json(&dir.path().join("split.json")), json(&dir.path().join("joined.json")));
}

#[test]
fn weights_json_sums_to_one() {
    let (dir, _) = dataset();
    ok(dir.path(), &["weights", "d.jsonl", "--events", "e000,e001", "--out", "w.json"]);
    let w = json(&dir.path().join("w.json"));
    let sum: f64 = ["saliency", "objects", "faces"].iter().map(|k| w["weights"][k].as_f64().unwrap()).sum();
    assert!((sum - 1.0).abs() < 1e-9);
    assert!(w.get("per_criterion_auc").is_some());
    assert!(w.get("events").is_some());
}
