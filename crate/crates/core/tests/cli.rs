mod common;

use std::path::Path;

use common::cli;
use serde_json::{json, Value};

fn write(dir: &Path, name: &str, value: &Value) -> String {
    let path = dir.join(name);
    std::fs::write(&path, serde_json::to_vec_pretty(value).unwrap()).unwrap();
    path.to_str().unwrap().to_string()
}

fn read_json(path: &Path) -> Value {
    serde_json::from_slice(&std::fs::read(path).unwrap()).unwrap()
}

fn two_by_two(texts: Value) -> Value {
    json!({
        "version": 1,
        "image_w": 400,
        "image_h": 300,
        "tables": [{
            "box": [100, 100, 300, 180],
            "class": "bordered",
            "score": 0.9,
            "cells": [
                {"box": [100, 100, 200, 140], "score": 1.0, "source": "bordered"},
                {"box": [200, 100, 300, 140], "score": 1.0, "source": "bordered"},
                {"box": [100, 140, 200, 180], "score": 1.0, "source": "bordered"},
                {"box": [200, 140, 300, 180], "score": 1.0, "source": "bordered"}
            ],
            "texts": texts
        }]
    })
}

fn text(b: [f64; 4], t: &str) -> Value {
    json!({"box": b, "text": t, "score": 0.99})
}

#[test]
fn zero_tables_exit_zero_and_no_csv() {
    let dir = tempfile::tempdir().unwrap();
    let input = write(
        dir.path(),
        "d.json",
        &json!({"version": 1, "image_w": 10, "image_h": 10, "tables": []}),
    );
    let out = dir.path().join("out");
    let (code, _, _) = cli(&["assemble", &input, "--out-dir", out.to_str().unwrap()]);
    assert_eq!(code, 0);
    let report = read_json(&out.join("assembly_report.json"));
    assert_eq!(report["n_tables"], 0);
    assert_eq!(common::dir_bytes(&out).len(), 1);
}

#[test]
fn text_outside_every_gate_is_reported_not_written() {
    let dir = tempfile::tempdir().unwrap();
    let doc = two_by_two(json!([
        text([110.0, 110.0, 150.0, 130.0], "a,b"),
        text([210.0, 110.0, 250.0, 130.0], "say \"hi\""),
        text([120.0, 150.0, 160.0, 170.0], "c"),
        text([350.0, 250.0, 390.0, 290.0], "stray"),
    ]));
    let input = write(dir.path(), "d.json", &doc);
    let out = dir.path().join("out");
    let (code, _, err) = cli(&["assemble", &input, "--out-dir", out.to_str().unwrap()]);
    assert_eq!(code, 0, "{err}");
    assert!(err.contains("outside every cell gate"));
    let csv = std::fs::read_to_string(out.join("table_000.csv")).unwrap();
    assert_eq!(csv, "\"a,b\",\"say \"\"hi\"\"\"\nc,\n");
    let report = read_json(&out.join("assembly_report.json"));
    assert_eq!(report["tables"][0]["n_unassigned_texts"], 1);
    assert_eq!(report["tables"][0]["n_rows"], 2);
}

#[test]
fn report_only_writes_no_csv() {
    let dir = tempfile::tempdir().unwrap();
    let input = write(dir.path(), "d.json", &two_by_two(json!([])));
    let out = dir.path().join("out");
    let (code, _, _) = cli(&[
        "assemble",
        &input,
        "--out-dir",
        out.to_str().unwrap(),
        "--format",
        "report-only",
    ]);
    assert_eq!(code, 0);
    assert_eq!(common::dir_bytes(&out).len(), 1);
}

#[test]
fn failing_table_is_isolated_unless_strict() {
    let dir = tempfile::tempdir().unwrap();
    let mut doc = two_by_two(json!([text([110.0, 110.0, 150.0, 130.0], "x")]));
    let mut empty = doc["tables"][0].clone();
    empty["cells"] = json!([]);
    doc["tables"] = json!([empty, doc["tables"][0].clone()]);
    let input = write(dir.path(), "d.json", &doc);
    let out = dir.path().join("out");
    let (code, _, err) = cli(&["assemble", &input, "--out-dir", out.to_str().unwrap()]);
    assert_eq!(code, 1);
    assert!(err.contains("table 0"));
    assert!(out.join("table_001.csv").exists());
    assert!(!out.join("table_000.csv").exists());
    assert_eq!(read_json(&out.join("assembly_report.json"))["n_failed"], 1);

    let strict_out = dir.path().join("strict");
    let (code, _, _) = cli(&[
        "assemble",
        &input,
        "--out-dir",
        strict_out.to_str().unwrap(),
        "--strict",
    ]);
    assert_eq!(code, 1);
    assert!(!strict_out.join("table_001.csv").exists());
}

#[test]
fn unknown_fields_warn_or_fail_under_strict() {
    let dir = tempfile::tempdir().unwrap();
    let mut doc = two_by_two(json!([]));
    doc["producer"] = json!("detector-v2");
    let input = write(dir.path(), "d.json", &doc);
    let out = dir.path().join("out");
    let (code, _, err) = cli(&["assemble", &input, "--out-dir", out.to_str().unwrap()]);
    assert_eq!(code, 0);
    assert!(err.contains("producer"), "{err}");
    let (code, _, err) = cli(&[
        "assemble",
        &input,
        "--out-dir",
        out.to_str().unwrap(),
        "--strict",
    ]);
    assert_eq!(code, 1);
    assert!(err.contains("producer"), "{err}");
}

#[test]
fn byte_order_mark_and_syntax_errors_are_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let bom = dir.path().join("bom.json");
    let mut bytes = b"\xEF\xBB\xBF".to_vec();
    bytes.extend(br#"{"version": 1, "image_w": 1, "image_h": 1, "tables": []}"#);
    std::fs::write(&bom, bytes).unwrap();
    let (code, _, err) = cli(&["assemble", bom.to_str().unwrap()]);
    assert_eq!(code, 1);
    assert!(
        err.to_lowercase().contains("byte-order mark") || err.contains("BOM"),
        "{err}"
    );

    let bad = dir.path().join("bad.json");
    std::fs::write(&bad, "{\n  \"version\": 1,\n  \"tables\": [,]\n}").unwrap();
    let (code, _, err) = cli(&["assemble", bad.to_str().unwrap()]);
    assert_eq!(code, 1);
    assert!(err.contains("line 3"), "{err}");

    let v2 = write(
        dir.path(),
        "v2.json",
        &json!({"version": 2, "image_w": 1, "image_h": 1, "tables": []}),
    );
    let (code, _, _) = cli(&["assemble", &v2]);
    assert_eq!(code, 1);
}

fn pred(probs: [f64; 3], b: [f64; 4]) -> Value {
    json!({"class_probs": probs, "box": b})
}

fn truth(class_id: usize, b: [f64; 4]) -> Value {
    json!({"class_id": class_id, "box": b})
}

fn run_match(dir: &Path, preds: Vec<Value>, truths: Vec<Value>) -> (i32, Value, String) {
    let p = write(dir, "p.json", &json!({"version": 1, "predictions": preds}));
    let t = write(dir, "t.json", &json!({"version": 1, "truths": truths}));
    let out = dir.join("match");
    let (code, _, err) = cli(&["match", &p, &t, "--out-dir", out.to_str().unwrap()]);
    let report = if code == 0 {
        read_json(&out.join("match_report.json"))
    } else {
        Value::Null
    };
    (code, report, err)
}

#[test]
fn match_identical_singletons_cost_nothing() {
    let dir = tempfile::tempdir().unwrap();
    let b = [0.5, 0.5, 0.2, 0.2];
    let (code, report, err) = run_match(
        dir.path(),
        vec![pred([1.0, 0.0, 0.0], b)],
        vec![truth(0, b)],
    );
    assert_eq!(code, 0, "{err}");
    assert_eq!(report["total_cost"], 0.0);
    assert_eq!(report["loss"], 0.0);
}

#[test]
fn match_swapped_pair_crosses() {
    let dir = tempfile::tempdir().unwrap();
    let (a, b) = ([0.25, 0.25, 0.2, 0.2], [0.75, 0.75, 0.2, 0.2]);
    let (code, report, _) = run_match(
        dir.path(),
        vec![pred([0.9, 0.05, 0.05], b), pred([0.9, 0.05, 0.05], a)],
        vec![truth(0, a), truth(0, b)],
    );
    assert_eq!(code, 0);
    assert_eq!(report["assignment"], json!([1, 0]));
}

#[test]
fn match_surplus_predictions_score_against_no_object() {
    let dir = tempfile::tempdir().unwrap();
    let boxes = [
        [0.2, 0.2, 0.1, 0.1],
        [0.5, 0.5, 0.1, 0.1],
        [0.8, 0.8, 0.1, 0.1],
        [0.2, 0.8, 0.1, 0.1],
        [0.8, 0.2, 0.1, 0.1],
    ];
    let preds: Vec<Value> = boxes.iter().map(|b| pred([0.6, 0.1, 0.3], *b)).collect();
    let truths: Vec<Value> = boxes[..3].iter().map(|b| truth(0, *b)).collect();
    let (code, report, _) = run_match(dir.path(), preds, truths);
    assert_eq!(code, 0);
    assert_eq!(report["unmatched"], json!([3, 4]));
    let no_object = report["no_object_nll"].as_f64().unwrap();
    assert!((no_object - 2.0 * -(0.3f64.ln())).abs() < 1e-12);
    let matched = 3.0 * -(0.6f64.ln());
    assert!((report["loss"].as_f64().unwrap() - matched - no_object).abs() < 1e-12);
}

#[test]
fn match_rejects_fewer_predictions_than_truths() {
    let dir = tempfile::tempdir().unwrap();
    let b = [0.5, 0.5, 0.2, 0.2];
    let (code, _, err) = run_match(
        dir.path(),
        vec![pred([1.0, 0.0, 0.0], b)],
        vec![truth(0, b), truth(1, b)],
    );
    assert_eq!(code, 1);
    assert!(!err.is_empty());
}

#[test]
fn synth_default_and_multi_config() {
    let dir = tempfile::tempdir().unwrap();
    let one = dir.path().join("one");
    let (code, _, _) = cli(&["synth", "--out-dir", one.to_str().unwrap()]);
    assert_eq!(code, 0);
    assert_eq!(
        read_json(&one.join("manifest.json"))["instances"]
            .as_array()
            .unwrap()
            .len(),
        1
    );

    let cfg = write(
        dir.path(),
        "cfg.json",
        &json!({"version": 1, "configs": [
            {"rows": 2, "cols": 2, "seed": 1},
            {"rows": 3, "cols": 5, "seed": 2, "text_dropout": 0.2},
            {"rows": 6, "cols": 1, "seed": 3, "centroid_jitter": 0.5}
        ]}),
    );
    let three = dir.path().join("three");
    let (code, _, err) = cli(&[
        "synth",
        "--config",
        &cfg,
        "--out-dir",
        three.to_str().unwrap(),
    ]);
    assert_eq!(code, 0, "{err}");
    assert_eq!(common::dir_bytes(&three).len(), 7);

    let eval = dir.path().join("eval");
    let manifest = three.join("manifest.json");
    let (code, _, err) = cli(&[
        "evaluate",
        "--manifest",
        manifest.to_str().unwrap(),
        "--out-dir",
        eval.to_str().unwrap(),
    ]);
    assert_eq!(code, 0);
    assert!(err.is_empty(), "{err}");
    let report = read_json(&eval.join("eval_report.json"));
    assert_eq!(report["instances"].as_array().unwrap().len(), 3);
}

#[test]
fn evaluate_pair_reports_every_field() {
    let dir = tempfile::tempdir().unwrap();
    let corpus_dir = dir.path().join("c");
    cli(&["synth", "--out-dir", corpus_dir.to_str().unwrap()]);
    let pred = corpus_dir.join("instance_0000.detections.json");
    let truth = corpus_dir.join("instance_0000.truth.json");
    let out = dir.path().join("e");
    let (code, _, err) = cli(&[
        "evaluate",
        "--pred",
        pred.to_str().unwrap(),
        "--truth",
        truth.to_str().unwrap(),
        "--out-dir",
        out.to_str().unwrap(),
    ]);
    assert_eq!(code, 0, "{err}");
    let report = read_json(&out.join("eval_report.json"));
    for field in [
        "mean_table_iou",
        "per_table_iou",
        "word_accuracy_positional",
        "word_accuracy_bag",
        "row_accuracy",
        "hungarian",
        "counts",
    ] {
        assert!(!report[field].is_null(), "missing {field}");
    }
    assert!(report["hungarian"]["per_pair"].is_array());
    assert!(report["counts"]["X"].is_u64() && report["counts"]["Y"].is_u64());
    assert!(report.get("timings_ms").is_none());

    let (code, _, _) = cli(&[
        "evaluate",
        "--pred",
        pred.to_str().unwrap(),
        "--truth",
        truth.to_str().unwrap(),
        "--out-dir",
        out.to_str().unwrap(),
        "--timings",
    ]);
    assert_eq!(code, 0);
    assert!(read_json(&out.join("eval_report.json"))["timings_ms"].is_object());
}

#[test]
fn evaluate_shape_mismatch_falls_back_to_bag() {
    let dir = tempfile::tempdir().unwrap();
    let pred = write(
        dir.path(),
        "p.json",
        &two_by_two(json!([
            text([110.0, 110.0, 150.0, 130.0], "a"),
            text([210.0, 110.0, 250.0, 130.0], "b"),
        ])),
    );
    let truth = write(
        dir.path(),
        "t.json",
        &json!({"version": 1, "image_w": 400, "image_h": 300, "tables": [{
            "box": [100, 100, 300, 180],
            "grid": {"n_rows": 1, "n_cols": 3, "cell_texts": {"0,0": "a", "0,1": "b", "0,2": "c"}}
        }]}),
    );
    let out = dir.path().join("e");
    let (code, _, err) = cli(&[
        "evaluate",
        "--pred",
        &pred,
        "--truth",
        &truth,
        "--out-dir",
        out.to_str().unwrap(),
    ]);
    assert_eq!(code, 0);
    assert!(err.contains("bag"), "{err}");
    let report = read_json(&out.join("eval_report.json"));
    assert_eq!(report["counts"], json!({"X": 2, "Y": 3}));

    let (code, _, _) = cli(&[
        "evaluate",
        "--pred",
        &pred,
        "--truth",
        &truth,
        "--out-dir",
        out.to_str().unwrap(),
        "--strict",
    ]);
    assert_eq!(code, 1);
}

#[test]
fn evaluate_requires_inputs() {
    let (code, _, err) = cli(&["evaluate"]);
    assert_eq!(code, 2);
    assert!(err.contains("--pred"));
}
