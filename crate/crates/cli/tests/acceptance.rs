//! Acceptance gate: one PASS/FAIL line per criterion, non-zero exit on any failure.

// a NaN must fail `ensure!`, hence `!cond` rather than the flipped comparison
#![allow(clippy::neg_cmp_op_on_partial_ord)]

#[path = "../../core/tests/common/mod.rs"]
mod common;

use std::io::{BufRead, BufReader};
use std::panic::{self, AssertUnwindSafe};
use std::path::{Path, PathBuf};
use std::process::{Child, Command, Stdio};
use std::time::{Duration, Instant};

use mqm_core::corpus::{parse_records, records_to_jsonl, sample_and_split, DatasetRecord, SplitSizes};
use mqm_core::experiments::{run_experiment_suite, SuiteConfig};
use mqm_core::features::FeatureMode;
use mqm_core::metrics::{chrf, sentence_bleu, BleuConfig, ChrfConfig};
use mqm_core::model::{Corpus, MqmScore};
use mqm_core::parser::{parse_document, serialize_document};
use mqm_core::rank_stats::{kendall_tau, tau_significance, TauVariant};
use mqm_core::regressor::{evaluate_predictions, loss_and_gradient, objective, train_on_features, Head, LinearParams, RegressorConfig};
use mqm_core::score_unit;
use mqm_core::synth::{linear_fixture, LinearFixtureConfig};
use rand::seq::IndexedRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::{json, Value};

fn fixture(rel: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../fixtures").join(rel)
}

fn read(rel: &str) -> String {
    std::fs::read_to_string(fixture(rel)).unwrap_or_else(|e| panic!("{rel}: {e}"))
}

type Check = fn() -> Result<String, String>;

macro_rules! ensure {
    ($cond:expr, $($fmt:tt)+) => {
        if !$cond {
            return Err(format!($($fmt)+));
        }
    };
}

fn golden_scores() -> Result<String, String> {
    let expected: Value = serde_json::from_str(&read("golden/expected.json")).map_err(|e| e.to_string())?;
    let blocks = parse_document(&read("golden/golden.mqm")).map_err(|e| e.to_string())?;
    let rows = expected["golden.mqm"].as_array().ok_or("expected.json lacks golden.mqm")?;
    ensure!(blocks.len() == 7 && rows.len() == 7, "expected 7 units, parsed {}", blocks.len());
    for (b, row) in blocks.iter().zip(rows) {
        ensure!(b.unit_id == row["id"].as_str().unwrap_or(""), "unit order: {} vs {}", b.unit_id, row["id"]);
        let s = score_unit(&b.annotation).map_err(|e| e.to_string())?;
        for (key, got) in [("accuracy", s.accuracy), ("fluency", s.fluency), ("style", s.style), ("total", s.total)] {
            if let Some(want) = row.get(key).and_then(Value::as_u64) {
                ensure!(got as u64 == want, "{} {key}: got {got}, expected {want}", b.unit_id);
            }
        }
    }
    let nilin = score_unit(&blocks[0].annotation).map_err(|e| e.to_string())?;
    ensure!(nilin == MqmScore::from_dimensions(11, 6, 5), "Ni'lin {nilin:?}");
    Ok("7/7 exact, Ni'lin (11, 6, 5, 22)".into())
}

fn parser_round_trip() -> Result<String, String> {
    let nilin = parse_document(&read("golden/nilin.mqm")).map_err(|e| e.to_string())?;
    ensure!(
        nilin.len() == 1 && nilin[0].annotation.errors.len() == 6,
        "verbatim block gave {} annotations",
        nilin[0].annotation.errors.len()
    );
    let mut rng = ChaCha8Rng::seed_from_u64(628);
    for i in 0..1000 {
        let doc = common::random_document(&mut rng);
        let text = serialize_document(&doc).map_err(|e| format!("doc {i}: {e}"))?;
        let back = parse_document(&text).map_err(|e| format!("doc {i}: {e}"))?;
        ensure!(back == doc, "doc {i}: parse(serialize(d)) != d");
        ensure!(serialize_document(&back).map_err(|e| e.to_string())? == text, "doc {i}: text not a fixpoint");
    }
    Ok("1000/1000 documents identical; verbatim example has 6 annotations".into())
}

fn kendall_oracle() -> Result<String, String> {
    let mut rng = ChaCha8Rng::seed_from_u64(629);
    let tau = |x: &[f64], y: &[f64], v| kendall_tau(x, y, v).map(|r| r.tau).ok();
    for case in 0..500 {
        let n = rng.random_range(2..=200);
        let levels = [2, 3, 5, 10, 40][case % 5];
        let x = common::tied_scores(&mut rng, n, levels);
        let y = common::tied_scores(&mut rng, n, levels);
        let gamma = tau(&x, &y, TauVariant::Gamma);
        let tb = tau(&x, &y, TauVariant::TauB);
        ensure!(gamma == common::brute_tau_gamma(&x, &y), "case {case}: gamma {gamma:?} vs oracle");
        ensure!(tb == common::brute_tau_b(&x, &y), "case {case}: tau-b {tb:?} vs oracle");
        let neg: Vec<f64> = y.iter().map(|v| -v).collect();
        ensure!(tau(&x, &neg, TauVariant::Gamma) == gamma.map(|t| -t), "case {case}: gamma not antisymmetric");
        ensure!(tau(&x, &neg, TauVariant::TauB) == tb.map(|t| -t), "case {case}: tau-b not antisymmetric");
        let mx: Vec<f64> = x.iter().map(|v| v.powi(3) + 2.0 * v + 7.0).collect();
        let my: Vec<f64> = y.iter().map(|v| (v / 3.0).exp()).collect();
        ensure!(tau(&mx, &my, TauVariant::Gamma) == gamma, "case {case}: gamma not monotone-invariant");
        ensure!(tau(&mx, &my, TauVariant::TauB) == tb, "case {case}: tau-b not monotone-invariant");
    }
    Ok("500/500 cases exact for gamma and tau-b; antisymmetry and monotone invariance hold".into())
}

fn significance() -> Result<String, String> {
    let stars = |t: f64| {
        let mut r = kendall_tau(&[1.0, 2.0], &[1.0, 2.0], TauVariant::Gamma).expect("trivial tau");
        r.tau = t;
        r.n = 1200;
        tau_significance(r).map(|r| (r.stars, r.p_value))
    };
    let (strong, p_strong) = stars(0.17).map_err(|e| e.to_string())?;
    let (weak, p_weak) = stars(0.01).map_err(|e| e.to_string())?;
    ensure!(strong == "***", "tau 0.17 gave `{strong}`");
    ensure!(weak.is_empty(), "tau 0.01 gave `{weak}`");
    Ok(format!("0.17 -> `***` (p={:.1e}), 0.01 -> `` (p={:.2})", p_strong.unwrap_or(f64::NAN), p_weak.unwrap_or(f64::NAN)))
}

fn gradient_check() -> Result<String, String> {
    let mut rng = ChaCha8Rng::seed_from_u64(631);
    let h = 1e-5;
    let mut worst = 0.0f64;
    for _ in 0..100 {
        let outputs = if rng.random_bool(0.5) { 3 } else { 1 };
        let features = rng.random_range(1..12);
        let batch = rng.random_range(1..16);
        let l2 = if rng.random_bool(0.3) { 0.0 } else { rng.random_range(0.0..0.1) };
        let x: Vec<Vec<f64>> = (0..batch).map(|_| (0..features).map(|_| rng.random_range(-2.0..2.0)).collect()).collect();
        let y: Vec<Vec<f64>> = (0..batch).map(|_| (0..outputs).map(|_| rng.random_range(-10.0..10.0)).collect()).collect();
        let mut p = LinearParams::zeros(outputs, features);
        p.weights.iter_mut().flatten().chain(p.bias.iter_mut()).for_each(|w| *w = rng.random_range(-1.0..1.0));
        let xs: Vec<&[f64]> = x.iter().map(Vec::as_slice).collect();
        let ys: Vec<&[f64]> = y.iter().map(Vec::as_slice).collect();
        let g = loss_and_gradient(&p, &xs, &ys, l2);
        let numeric = |bump: &dyn Fn(&mut LinearParams, f64)| {
            let mut plus = p.clone();
            bump(&mut plus, h);
            let mut minus = p.clone();
            bump(&mut minus, -h);
            (objective(&plus, &xs, &ys, l2) - objective(&minus, &xs, &ys, l2)) / (2.0 * h)
        };
        let rel = |a: f64, n: f64| (a - n).abs() / a.abs().max(n.abs()).max(1e-12);
        for k in 0..outputs {
            for j in 0..features {
                worst = worst.max(rel(g.weights[k][j], numeric(&|q, d| q.weights[k][j] += d)));
            }
            worst = worst.max(rel(g.bias[k], numeric(&|q, d| q.bias[k] += d)));
        }
    }
    ensure!(worst < 1e-4, "max relative error {worst:.2e}");
    Ok(format!("100 configurations, max relative error {worst:.2e}"))
}

fn regressor_recovery() -> Result<String, String> {
    let data = linear_fixture(&LinearFixtureConfig::default());
    let split = sample_and_split(&data, 632, SplitSizes::default()).map_err(|e| e.to_string())?;
    let rows: Vec<Vec<f64>> = split.train.iter().map(|s| s.mte.clone()).collect();
    let targets: Vec<Vec<f64>> = split.train.iter().map(|s| s.gold.to_vec()).collect();
    let model = train_on_features(&rows, &targets, &RegressorConfig::default()).map_err(|e| e.to_string())?;
    let preds: Vec<Vec<f64>> = split.test.iter().map(|s| model.predict_features(&s.mte)).collect();
    let gold: Vec<[f64; 3]> = split.test.iter().map(|s| s.gold).collect();
    let report = evaluate_predictions(FeatureMode::Mte, Head::MultiScore, preds, &gold, TauVariant::Gamma).map_err(|e| e.to_string())?;
    let taus = report.dimension_taus().ok_or("no dimension taus")?;
    ensure!(taus.iter().all(|&t| t >= 0.95), "test taus {taus:?}");

    let tables = run_experiment_suite(&split, &SuiteConfig::default()).map_err(|e| e.to_string())?;
    let mut curves = Vec::new();
    for mode in [FeatureMode::Mte, FeatureMode::Qe] {
        for variant in [TauVariant::Gamma, TauVariant::TauB] {
            let curve: Vec<(usize, f64)> =
                tables.size_curve.iter().filter(|p| p.mode == mode && p.variant == variant).map(|p| (p.size, p.mean_tau.mean)).collect();
            ensure!(curve.len() == 5, "{mode:?} {variant:?}: {} curve points", curve.len());
            for w in curve.windows(2) {
                ensure!(
                    w[1].1 >= w[0].1 - 0.05,
                    "{mode:?} {variant:?}: mean tau drops from {:.3} at {} to {:.3} at {}",
                    w[0].1,
                    w[0].0,
                    w[1].1,
                    w[1].0
                );
            }
            if variant == TauVariant::Gamma {
                curves.push(format!("{} {:.2}->{:.2}", mode.label(), curve[0].1, curve[4].1));
            }
        }
    }
    Ok(format!(
        "test tau acc {:.3} flu {:.3} sty {:.3}; size curve ({}) non-decreasing within 0.05 over 3 seeds",
        taus[0],
        taus[1],
        taus[2],
        curves.join(", ")
    ))
}

fn heads_delta() -> Result<String, String> {
    let data = linear_fixture(&LinearFixtureConfig { shared_signal: true, seed: 633, ..Default::default() });
    let split = sample_and_split(&data, 633, SplitSizes::default()).map_err(|e| e.to_string())?;
    let cfg = SuiteConfig { sizes: vec![1000], ..Default::default() };
    let tables = run_experiment_suite(&split, &cfg).map_err(|e| e.to_string())?;
    let mut parts = Vec::new();
    for h in &tables.heads {
        ensure!(h.delta.per_seed.len() == 3, "{} seeds", h.delta.per_seed.len());
        for ((d, m), s) in h.delta.per_seed.iter().zip(&h.multi.per_seed).zip(&h.single.per_seed) {
            ensure!(*d == m - s, "delta {d} != multi {m} - single {s}");
        }
        let nonneg = h.delta.per_seed.iter().filter(|&&d| d >= 0.0).count();
        ensure!(nonneg >= 2, "{} {}: delta >= 0 in {nonneg}/3 seeds ({:?})", h.mode.label(), h.variant.label(), h.delta.per_seed);
        parts.push(format!("{} {} {:+.4} ({nonneg}/3)", h.mode.label(), h.variant.label(), h.delta.mean));
    }
    Ok(format!("delta = multi - single: {}", parts.join(", ")))
}

fn split_balance() -> Result<String, String> {
    let records = parse_records(&read("synthetic_1200.jsonl"), Corpus::GlobalVoices).map_err(|e| e.to_string())?;
    let gv = records.iter().filter(|r| r.unit.corpus == Corpus::GlobalVoices).count();
    ensure!(gv == 600 && records.len() == 1200, "fixture has {gv} GV of {}", records.len());
    let split = sample_and_split(&records, 634, SplitSizes::default()).map_err(|e| e.to_string())?;
    let mut counts = Vec::new();
    for ((name, part), n) in split.parts().into_iter().zip([1000, 100, 100]) {
        let g = part.iter().filter(|r| r.unit.corpus == Corpus::GlobalVoices).count();
        ensure!(part.len() == n && g == n / 2, "{name}: {g}/{}", part.len() - g);
        counts.push(format!("{g}/{}", part.len() - g));
    }
    let render = |seed| -> Result<String, String> {
        let s = sample_and_split(&records, seed, SplitSizes::default()).map_err(|e| e.to_string())?;
        Ok([records_to_jsonl(&s.train), records_to_jsonl(&s.validation), records_to_jsonl(&s.test)].concat())
    };
    ensure!(render(7)? == render(7)?, "same seed gave different bytes");
    Ok(format!("{} per corpus; seed 7 byte-identical across runs", counts.join(", ")))
}

fn metric_sanity() -> Result<String, String> {
    let s = "그가 제시한 보고서는 사진과 일치합니다.";
    let bleu_id = sentence_bleu(s, s, &BleuConfig::default()).map_err(|e| e.to_string())?;
    let chrf_id = chrf(s, s, &ChrfConfig::default()).map_err(|e| e.to_string())?;
    ensure!(bleu_id == 1.0 && chrf_id == 1.0, "identity gave BLEU {bleu_id}, chrF {chrf_id}");
    let b =
        sentence_bleu("the cat", "the cat sat on", &BleuConfig { max_ngram_order: 2, ..Default::default() }).map_err(|e| e.to_string())?;
    ensure!((b - 0.3679).abs() < 1e-4, "hand example BLEU {b}");
    const ALPHABET: &[&str] = &["가", "나", "다", "a", "b", "c", " ", " ", "."];
    let mut rng = ChaCha8Rng::seed_from_u64(635);
    let mut text = || {
        let n = rng.random_range(1..30);
        let t: String = (0..n).map(|_| *ALPHABET.choose(&mut rng).unwrap()).collect();
        if t.trim().is_empty() {
            "가".to_string()
        } else {
            t
        }
    };
    for i in 0..200 {
        let (h, r) = (text(), text());
        let got = chrf(&h, &r, &ChrfConfig::default()).map_err(|e| e.to_string())?;
        let want = common::brute_chrf(&h, &r, 6, 2.0);
        ensure!((got - want).abs() <= 1e-12, "pair {i} {h:?}/{r:?}: {got} vs oracle {want}");
    }
    Ok(format!("identity 1.0/1.0; BLEU example {b:.4}; chrF = oracle on 200/200 pairs"))
}

struct Server {
    child: Child,
    base: String,
}

impl Server {
    fn start(data: &Path, state: &Path) -> Result<Self, String> {
        let mut child = Command::new(env!("CARGO_BIN_EXE_mqm"))
            .args(["serve", "--port", "0", "--snapshot-every", "16", "--data"])
            .arg(data)
            .arg("--state-dir")
            .arg(state)
            .stdout(Stdio::piped())
            .stderr(Stdio::null())
            .spawn()
            .map_err(|e| format!("spawn: {e}"))?;
        let mut line = String::new();
        BufReader::new(child.stdout.take().ok_or("no stdout")?).read_line(&mut line).map_err(|e| e.to_string())?;
        let base = line.trim().strip_prefix("listening on ").ok_or_else(|| format!("unexpected banner `{line}`"))?.to_string();
        Ok(Self { child, base })
    }

    fn kill(mut self) {
        let _ = self.child.kill();
        let _ = self.child.wait();
    }
}

impl Drop for Server {
    fn drop(&mut self) {
        let _ = self.child.kill();
    }
}

fn get(client: &reqwest::blocking::Client, url: String) -> Result<(u16, String), String> {
    let r = client.get(&url).send().map_err(|e| format!("GET {url}: {e}"))?;
    let status = r.status().as_u16();
    Ok((status, r.text().map_err(|e| e.to_string())?))
}

fn service_state(client: &reqwest::blocking::Client, base: &str) -> Result<Value, String> {
    let (s, body) = get(client, format!("{base}/units?limit=1000"))?;
    ensure!(s == 200, "GET /units -> {s}");
    let page: Value = serde_json::from_str(&body).map_err(|e| e.to_string())?;
    let mut details = Vec::new();
    for item in page["items"].as_array().ok_or("no items")? {
        let (s, body) = get(client, format!("{base}/units/{}", item["unit_id"].as_str().unwrap_or_default()))?;
        ensure!(s == 200, "GET unit -> {s}");
        details.push(serde_json::from_str::<Value>(&body).map_err(|e| e.to_string())?);
    }
    Ok(json!({ "page": page, "details": details }))
}

fn service_durability() -> Result<String, String> {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let records = parse_records(&read("annotated_100.jsonl"), Corpus::GlobalVoices).map_err(|e| e.to_string())?;
    let bare: Vec<DatasetRecord> = records.iter().map(|r| DatasetRecord::from_unit(r.unit.clone())).collect();
    let data = dir.path().join("units.jsonl");
    std::fs::write(&data, records_to_jsonl(&bare)).map_err(|e| e.to_string())?;
    let state = dir.path().join("state");
    let client = reqwest::blocking::Client::builder().timeout(Duration::from_secs(10)).build().map_err(|e| e.to_string())?;

    let server = Server::start(&data, &state)?;
    // 40 first writes, then 10 overwrites with a different annotator and status
    let mut live = std::collections::BTreeMap::new();
    for i in 0..50 {
        let r = &records[if i < 40 { i } else { i - 40 }];
        let errors = if i < 40 { r.errors.clone().unwrap_or_default() } else { Vec::new() };
        let body = json!({ "errors": errors, "status": if i % 7 == 3 { "in_progress" } else { "done" } });
        let resp = client
            .put(format!("{}/units/{}/annotation", server.base, r.unit.id))
            .header("x-annotator-id", if i < 40 { "primary" } else { "second" })
            .header("content-type", "application/json")
            .body(body.to_string())
            .send()
            .map_err(|e| e.to_string())?;
        ensure!(resp.status().as_u16() == 200, "write {i} -> {}", resp.status());
        let v: Value = resp.json().map_err(|e| e.to_string())?;
        live.insert(r.unit.id.clone(), v["score"].clone());
    }
    let before = service_state(&client, &server.base)?;
    server.kill();

    let server = Server::start(&data, &state)?;
    let after = service_state(&client, &server.base)?;
    ensure!(before == after, "state after restart differs");

    let (s, doc) = get(&client, format!("{}/export?format=mqm-text&status=done", server.base))?;
    ensure!(s == 200, "export -> {s}");
    let (s2, doc2) = get(&client, format!("{}/export?format=mqm-text&status=in_progress", server.base))?;
    ensure!(s2 == 200, "export -> {s2}");
    let mut exported = 0;
    for text in [doc, doc2] {
        for b in parse_document(&text).map_err(|e| format!("export does not parse: {e}"))? {
            let score = score_unit(&b.annotation).map_err(|e| e.to_string())?;
            let want = live.get(&b.unit_id).ok_or_else(|| format!("unexpected unit {}", b.unit_id))?;
            ensure!(serde_json::to_value(score).map_err(|e| e.to_string())? == *want, "{}: exported {score:?} vs live {want}", b.unit_id);
            exported += 1;
        }
    }
    ensure!(exported == live.len(), "exported {exported} units, {} annotated", live.len());
    server.kill();
    Ok(format!("50 acknowledged writes survive SIGKILL; {exported} exported units re-score to the live values"))
}

fn main() {
    let criteria: [(&str, Check, Duration); 10] = [
        ("golden-score fixtures", golden_scores, Duration::from_secs(1)),
        ("parser round trip", parser_round_trip, Duration::from_secs(5)),
        ("kendall oracle equivalence", kendall_oracle, Duration::from_secs(10)),
        ("significance at n=1200", significance, Duration::MAX),
        ("regressor gradient check", gradient_check, Duration::from_secs(5)),
        ("regressor recovery and size curve", regressor_recovery, Duration::from_secs(30)),
        ("multi-vs-single harness", heads_delta, Duration::MAX),
        ("split balance", split_balance, Duration::MAX),
        ("BLEU/chrF sanity", metric_sanity, Duration::MAX),
        ("service durability", service_durability, Duration::from_secs(30)),
    ];
    panic::set_hook(Box::new(|_| {}));
    let mut failed = 0;
    for (name, check, budget) in criteria {
        let start = Instant::now();
        let result = panic::catch_unwind(AssertUnwindSafe(check)).unwrap_or_else(|p| {
            Err(p
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_else(|| "panicked".into()))
        });
        let elapsed = start.elapsed();
        let result = match result {
            Ok(_) if elapsed > budget => Err(format!("took {elapsed:.2?}, budget {budget:?}")),
            r => r,
        };
        match result {
            Ok(detail) => println!("PASS  {name}: {detail} [{elapsed:.2?}]"),
            Err(why) => {
                failed += 1;
                println!("FAIL  {name}: {why} [{elapsed:.2?}]");
            }
        }
    }
    println!("acceptance: {}/10 criteria passed", 10 - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
