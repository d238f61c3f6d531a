//! Independent oracles and generators shared by the integration tests.
#![allow(dead_code)]

use std::collections::HashMap;

use mqm_core::model::{Dimension, ErrorAnnotation, Severity, SpanSide, SubErrorType, UnitAnnotation};
use mqm_core::parser::AnnotatedBlock;
use rand::seq::IndexedRandom;
use rand::Rng;

/// Pair counts by exhaustive enumeration: (C, D, ties only in x, ties only in y, ties in both).
pub fn brute_pairs(x: &[f64], y: &[f64]) -> (u64, u64, u64, u64, u64) {
    let (mut c, mut d, mut tx, mut ty, mut txy) = (0, 0, 0, 0, 0);
    for i in 0..x.len() {
        for j in i + 1..x.len() {
            let dx = x[i] - x[j];
            let dy = y[i] - y[j];
            if dx == 0.0 && dy == 0.0 {
                txy += 1;
            } else if dx == 0.0 {
                tx += 1;
            } else if dy == 0.0 {
                ty += 1;
            } else if (dx > 0.0) == (dy > 0.0) {
                c += 1;
            } else {
                d += 1;
            }
        }
    }
    (c, d, tx, ty, txy)
}

pub fn brute_tau_gamma(x: &[f64], y: &[f64]) -> Option<f64> {
    let (c, d, ..) = brute_pairs(x, y);
    (c + d > 0).then(|| (c as f64 - d as f64) / (c + d) as f64)
}

pub fn brute_tau_b(x: &[f64], y: &[f64]) -> Option<f64> {
    let (c, d, tx, ty, txy) = brute_pairs(x, y);
    let n0 = c + d + tx + ty + txy;
    let n1 = tx + txy;
    let n2 = ty + txy;
    let denom = ((n0 - n1) as f64 * (n0 - n2) as f64).sqrt();
    (denom > 0.0).then(|| (c as f64 - d as f64) / denom)
}

/// All contiguous n-grams as owned strings, counted.
fn char_ngrams(chars: &[char], n: usize) -> HashMap<String, usize> {
    let mut m = HashMap::new();
    if chars.len() >= n {
        for i in 0..=chars.len() - n {
            *m.entry(chars[i..i + n].iter().collect::<String>()).or_insert(0) += 1;
        }
    }
    m
}

/// chrF by explicit multiset intersection, straight from the definition.
pub fn brute_chrf(hyp: &str, reference: &str, order: usize, beta: f64) -> f64 {
    let h: Vec<char> = hyp.chars().filter(|c| !c.is_whitespace()).collect();
    let r: Vec<char> = reference.chars().filter(|c| !c.is_whitespace()).collect();
    let mut precisions = Vec::new();
    let mut recalls = Vec::new();
    for n in 1..=order {
        let hg = char_ngrams(&h, n);
        let rg = char_ngrams(&r, n);
        let h_total: usize = hg.values().sum();
        let r_total: usize = rg.values().sum();
        if h_total == 0 && r_total == 0 {
            continue;
        }
        let mut matched = 0;
        for (g, &count) in &hg {
            matched += count.min(*rg.get(g).unwrap_or(&0));
        }
        precisions.push(if h_total == 0 { 0.0 } else { matched as f64 / h_total as f64 });
        recalls.push(if r_total == 0 { 0.0 } else { matched as f64 / r_total as f64 });
    }
    let p = precisions.iter().sum::<f64>() / precisions.len() as f64;
    let rc = recalls.iter().sum::<f64>() / recalls.len() as f64;
    let b2 = beta * beta;
    if p == 0.0 && rc == 0.0 {
        0.0
    } else {
        (1.0 + b2) * p * rc / (b2 * p + rc)
    }
}

const KO_WORDS: &[&str] = &[
    "그가",
    "제시한",
    "보고서는",
    "사진과",
    "일치합니다.",
    "인도주의",
    "분야는",
    "데이터",
    "통합의",
    "중추적",
    "순간을",
    "경험하고",
    "있습니다.",
    "우리",
    "가족에게는",
    "신생아가",
    "Kareem",
    "Fahim이",
    "Twitter에서",
    "(Mohammed",
    "Ghannouchi)",
    "총리가,",
    "국영",
    "TV에서",
    "2013년",
    "방패와",
    "막대기를",
    "a/b",
    "x(y",
    "끝)",
];
const EN_WORDS: &[&str] = &[
    "And",
    "demonstrations",
    "also",
    "occurred",
    "in",
    "the",
    "report",
    "matches",
    "photograph",
    "to",
    "speak",
    "of",
    "Does",
    "Guinea",
    "even",
    "have",
    "a",
    "blogosphere",
    "Below",
    "If",
    "shields,",
    "(carrying",
    "sticks)",
];

fn words(rng: &mut impl Rng, vocab: &[&str], min: usize, max: usize) -> Vec<String> {
    let n = rng.random_range(min..=max);
    (0..n).map(|_| vocab.choose(rng).unwrap().to_string()).collect()
}

fn random_span(rng: &mut impl Rng, tokens: &[String]) -> String {
    let start = rng.random_range(0..tokens.len());
    let len = rng.random_range(1..=(tokens.len() - start).min(4));
    tokens[start..start + len].join(" ")
}

/// A random block whose annotation is valid and representable.
pub fn random_block(rng: &mut impl Rng, index: usize) -> AnnotatedBlock {
    let src = words(rng, EN_WORDS, 3, 12);
    let hyp = words(rng, KO_WORDS, 3, 14);
    let source = src.join(" ");
    let hypothesis = hyp.join(" ");
    let unit_id = if rng.random_bool(0.5) { format!("unit-{}", index + 1) } else { format!("u{}-{}", rng.random_range(0..1000), index) };
    let mut errors = Vec::new();
    for dimension in Dimension::ALL {
        let n = rng.random_range(0..=3);
        let subtypes: Vec<SubErrorType> = SubErrorType::for_dimension(dimension).collect();
        for _ in 0..n {
            let subtype = *subtypes.choose(rng).unwrap();
            let severity = if rng.random_bool(0.5) { Severity::Major } else { Severity::Minor };
            let omission = dimension == Dimension::Accuracy && subtype == SubErrorType::Omission;
            let (span, side) = if omission && rng.random_bool(0.7) {
                let s = random_span(rng, &src);
                let side = if hypothesis.contains(&s) { SpanSide::Hypothesis } else { SpanSide::Source };
                (s, side)
            } else {
                (random_span(rng, &hyp), SpanSide::Hypothesis)
            };
            let mut e = ErrorAnnotation::new(dimension, subtype, severity, span);
            e.span_side = side;
            errors.push(e);
        }
    }
    AnnotatedBlock { annotation: UnitAnnotation::new(unit_id.clone(), errors), unit_id, source, hypothesis }
}

pub fn random_document(rng: &mut impl Rng) -> Vec<AnnotatedBlock> {
    let n = rng.random_range(1..=5);
    let mut blocks: Vec<AnnotatedBlock> = (0..n).map(|i| random_block(rng, i)).collect();
    // explicit ids must be unique within a document
    for (i, b) in blocks.iter_mut().enumerate() {
        if !b.unit_id.starts_with("unit-") {
            b.unit_id = format!("doc{i}-{}", b.unit_id);
            b.annotation.unit_id = b.unit_id.clone();
        }
    }
    blocks
}

/// Integer score vector with heavy ties.
pub fn tied_scores(rng: &mut impl Rng, n: usize, levels: i64) -> Vec<f64> {
    (0..n).map(|_| rng.random_range(0..levels) as f64).collect()
}
