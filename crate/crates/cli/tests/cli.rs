use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

fn fixture(rel: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../fixtures").join(rel)
}

fn mqm(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_mqm")).args(args).output().expect("spawn mqm")
}

fn json(args: &[&str]) -> Value {
    let mut full = vec!["--format", "json"];
    full.extend_from_slice(args);
    let out = mqm(&full);
    assert!(out.status.success(), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
    serde_json::from_slice(&out.stdout).unwrap()
}

fn path(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn score_reports_the_worked_example() {
    let v = json(&["score", "-a", path(&fixture("golden/nilin.mqm"))]);
    let u = &v["units"][0];
    assert_eq!(
        (u["accuracy"].as_u64(), u["fluency"].as_u64(), u["style"].as_u64(), u["total"].as_u64()),
        (Some(11), Some(6), Some(5), Some(22))
    );

    let text = mqm(&["score", "-a", path(&fixture("golden/nilin.mqm"))]);
    assert!(text.status.success());
    let stdout = String::from_utf8(text.stdout).unwrap();
    assert!(stdout.lines().any(|l| l.split_whitespace().collect::<Vec<_>>() == ["unit-1", "11", "6", "5", "22"]), "{stdout}");
}

#[test]
fn golden_scores_match_expected_file() {
    let expected: Value = serde_json::from_str(&fs::read_to_string(fixture("golden/expected.json")).unwrap()).unwrap();
    let v = json(&["score", "-a", path(&fixture("golden/golden.mqm"))]);
    let units = v["units"].as_array().unwrap();
    let want = expected["golden.mqm"].as_array().unwrap();
    assert_eq!(units.len(), want.len());
    for (got, want) in units.iter().zip(want) {
        for k in ["accuracy", "fluency", "style", "total"] {
            if let Some(w) = want.get(k) {
                assert_eq!(&got[k], w, "{} {k}", want["id"]);
            }
        }
    }
}

#[test]
fn exit_codes() {
    // clap usage error
    assert_eq!(mqm(&["score"]).status.code(), Some(2));
    // missing file
    assert_eq!(mqm(&["score", "-a", "/nonexistent/x.mqm"]).status.code(), Some(1));

    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.mqm");
    let text = fs::read_to_string(fixture("golden/nilin.mqm")).unwrap().replacen("And(omission", "Qqq(omission", 1);
    fs::write(&bad, text).unwrap();
    let out = mqm(&["--format", "json", "validate", "--input", path(&bad)]);
    assert_eq!(out.status.code(), Some(1));
    let v: Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v[0]["violations"][0]["code"], "SPAN_NOT_FOUND");

    assert_eq!(mqm(&["validate", "--input", path(&fixture("golden/nilin.mqm"))]).status.code(), Some(0));

    // a single column cannot be correlated
    let t = dir.path().join("one.tsv");
    fs::write(&t, "a\n1\n2\n").unwrap();
    assert_eq!(mqm(&["corr", "--input", path(&t)]).status.code(), Some(2));
    assert_eq!(mqm(&["experiments"]).status.code(), Some(2));
}

#[test]
fn corr_of_identical_columns_is_one() {
    let dir = tempfile::tempdir().unwrap();
    let t = dir.path().join("t.tsv");
    let mut body = String::from("id\ta\tb\tc\n");
    for (i, x) in [3.0, 1.0, 4.0, 1.0, 5.0, 9.0, 2.0, 6.0, 5.0, 3.0, 5.0].iter().enumerate() {
        body += &format!("u{i}\t{x}\t{x}\t{}\n", -x);
    }
    fs::write(&t, body).unwrap();
    for variant in ["gamma", "tau-b"] {
        let v = json(&["corr", "--input", path(&t), "--variant", variant]);
        let cells = &v["cells"];
        assert_eq!(cells[0][1]["tau"].as_f64(), Some(1.0), "{variant}");
        assert_eq!(cells[0][0]["tau"].as_f64(), Some(1.0), "{variant}");
        assert_eq!(cells[0][2]["tau"].as_f64(), Some(-1.0), "{variant}");
    }
    let v = json(&["corr", "--input", path(&t), "--invert", "c"]);
    assert_eq!(v["cells"][0][2]["tau"].as_f64(), Some(1.0));
}

#[test]
fn split_is_deterministic() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let input = fixture("synthetic_1200.jsonl");
    for d in [&a, &b] {
        let out = mqm(&["split", "--input", path(&input), "--seed", "7", "--out-dir", path(d.path())]);
        assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    }
    for name in ["train.jsonl", "validation.jsonl", "test.jsonl"] {
        let x = fs::read(a.path().join(name)).unwrap();
        let y = fs::read(b.path().join(name)).unwrap();
        assert!(!x.is_empty());
        assert_eq!(x, y, "{name}");
    }
    let c = tempfile::tempdir().unwrap();
    mqm(&["split", "--input", path(&input), "--seed", "8", "--out-dir", path(c.path())]);
    assert_ne!(fs::read(a.path().join("train.jsonl")).unwrap(), fs::read(c.path().join("train.jsonl")).unwrap());
}

#[test]
fn metrics_feed_corr() {
    let dir = tempfile::tempdir().unwrap();
    let m = dir.path().join("m.tsv");
    let rows = json(&["metrics", "--input", path(&fixture("annotated_100.jsonl")), "-o", path(&m)]);
    assert_eq!(rows.as_array().unwrap().len(), 100);
    for r in rows.as_array().unwrap() {
        let bleu = r["bleu"].as_f64().unwrap();
        let chrf = r["chrf"].as_f64().unwrap();
        assert!((0.0..=1.0).contains(&bleu) && (0.0..=1.0).contains(&chrf));
    }
    let v = json(&["corr", "--input", path(&m), "--columns", "total,bleu,chrf"]);
    let names: Vec<&str> = v["names"].as_array().unwrap().iter().map(|n| n.as_str().unwrap()).collect();
    assert_eq!(names.len(), 3);
    assert!(names[0].starts_with("total"));
}

#[test]
fn train_then_eval() {
    let dir = tempfile::tempdir().unwrap();
    json(&["split", "--input", path(&fixture("synthetic_1200.jsonl")), "--out-dir", path(dir.path())]);
    let model = dir.path().join("model.json");
    json(&["train", "--train", path(&dir.path().join("train.jsonl")), "--model-out", path(&model), "--epochs", "20"]);
    let r = json(&["eval", "--model", path(&model), "--test", path(&dir.path().join("test.jsonl"))]);
    let overall = r["overall"].as_f64().unwrap();
    assert!(overall > 0.3, "{overall}");
    let mean = r["mean_dimension_tau"].as_f64().unwrap();
    let dims: f64 = ["accuracy", "fluency", "style"].iter().map(|k| r[k].as_f64().unwrap()).sum::<f64>() / 3.0;
    assert!((mean - dims).abs() < 1e-12);
}
