//! Sentence-level BLEU and chrF.
//!
//! BLEU here is a plain smoothed sentence BLEU: clipped n-gram precisions
//! up to the effective order `min(N, |hyp|)`, zero match counts replaced by
//! `epsilon`, times the brevity penalty `exp(1 - r/c)` when `c < r`. It does
//! not try to reproduce any particular SacreBLEU signature.

use std::collections::HashMap;
use std::hash::Hash;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::TranslationUnit;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MetricError {
    #[error("reference is empty")]
    EmptyReference,
    #[error("invalid metric configuration: {0}")]
    InvalidConfig(&'static str),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Tokenizer {
    /// Whitespace tokens (eojeol for Korean).
    #[default]
    Whitespace,
    /// Every non-whitespace character is a token.
    Character,
}

impl Tokenizer {
    pub fn tokenize(self, text: &str) -> Vec<&str> {
        match self {
            Tokenizer::Whitespace => text.split_whitespace().collect(),
            Tokenizer::Character => {
                text.char_indices().filter(|(_, c)| !c.is_whitespace()).map(|(i, c)| &text[i..i + c.len_utf8()]).collect()
            }
        }
    }
}

impl std::str::FromStr for Tokenizer {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "whitespace" | "ws" => Ok(Tokenizer::Whitespace),
            "character" | "char" => Ok(Tokenizer::Character),
            _ => Err(format!("unknown tokenizer `{s}` (expected whitespace or char)")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BleuConfig {
    pub max_ngram_order: usize,
    pub smoothing_epsilon: f64,
    pub tokenizer: Tokenizer,
}

impl Default for BleuConfig {
    fn default() -> Self {
        Self { max_ngram_order: 4, smoothing_epsilon: 0.1, tokenizer: Tokenizer::Whitespace }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChrfConfig {
    pub char_ngram_order: usize,
    pub beta: f64,
}

impl Default for ChrfConfig {
    fn default() -> Self {
        Self { char_ngram_order: 6, beta: 2.0 }
    }
}

fn ngram_counts<T: Hash + Eq>(items: &[T], n: usize) -> HashMap<&[T], usize> {
    let mut counts = HashMap::new();
    if items.len() >= n {
        for w in items.windows(n) {
            *counts.entry(w).or_insert(0) += 1;
        }
    }
    counts
}

/// Size of the multiset intersection of the order-`n` n-grams.
fn clipped_matches<T: Hash + Eq>(hyp: &[T], reference: &[T], n: usize) -> usize {
    let ref_counts = ngram_counts(reference, n);
    ngram_counts(hyp, n).into_iter().map(|(g, c)| c.min(ref_counts.get(g).copied().unwrap_or(0))).sum()
}

pub fn sentence_bleu(hypothesis: &str, reference: &str, cfg: &BleuConfig) -> Result<f64, MetricError> {
    if cfg.max_ngram_order == 0 {
        return Err(MetricError::InvalidConfig("max_ngram_order must be >= 1"));
    }
    if !(cfg.smoothing_epsilon > 0.0) {
        return Err(MetricError::InvalidConfig("smoothing_epsilon must be > 0"));
    }
    let hyp = cfg.tokenizer.tokenize(hypothesis);
    let reference = cfg.tokenizer.tokenize(reference);
    if reference.is_empty() {
        return Err(MetricError::EmptyReference);
    }
    if hyp.is_empty() {
        return Ok(0.0);
    }

    let (c, r) = (hyp.len(), reference.len());
    let order = cfg.max_ngram_order.min(c);
    let mut log_sum = 0.0;
    for n in 1..=order {
        let total = (c - n + 1) as f64;
        let matches = clipped_matches(&hyp, &reference, n) as f64;
        let numerator = if matches > 0.0 { matches } else { cfg.smoothing_epsilon };
        log_sum += (numerator / total).ln();
    }
    let brevity = if c < r { (1.0 - r as f64 / c as f64).exp() } else { 1.0 };
    Ok(((log_sum / order as f64).exp() * brevity).clamp(0.0, 1.0))
}

/// Character n-gram F-score; whitespace is removed before extracting n-grams.
///
/// Precision and recall are averaged over the orders for which either side
/// has n-grams (a side without n-grams of that order contributes 0), then
/// combined as `F_beta`.
pub fn chrf(hypothesis: &str, reference: &str, cfg: &ChrfConfig) -> Result<f64, MetricError> {
    if cfg.char_ngram_order == 0 {
        return Err(MetricError::InvalidConfig("char_ngram_order must be >= 1"));
    }
    if !(cfg.beta > 0.0) {
        return Err(MetricError::InvalidConfig("beta must be > 0"));
    }
    let hyp: Vec<char> = hypothesis.chars().filter(|c| !c.is_whitespace()).collect();
    let reference: Vec<char> = reference.chars().filter(|c| !c.is_whitespace()).collect();
    if reference.is_empty() {
        return Err(MetricError::EmptyReference);
    }

    let (mut precision, mut recall, mut orders) = (0.0, 0.0, 0usize);
    for n in 1..=cfg.char_ngram_order {
        let hyp_total = hyp.len().saturating_sub(n - 1);
        let ref_total = reference.len().saturating_sub(n - 1);
        if hyp_total == 0 && ref_total == 0 {
            break;
        }
        let matches = clipped_matches(&hyp, &reference, n) as f64;
        if hyp_total > 0 {
            precision += matches / hyp_total as f64;
        }
        if ref_total > 0 {
            recall += matches / ref_total as f64;
        }
        orders += 1;
    }
    Ok(f_beta(precision / orders as f64, recall / orders as f64, cfg.beta))
}

/// `(1 + b^2) P R / (b^2 P + R)`, or 0 when both are 0.
pub fn f_beta(precision: f64, recall: f64, beta: f64) -> f64 {
    let b2 = beta * beta;
    let denom = b2 * precision + recall;
    if denom <= 0.0 {
        0.0
    } else {
        ((1.0 + b2) * precision * recall / denom).clamp(0.0, 1.0)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricRow {
    pub unit_id: String,
    pub bleu: f64,
    pub chrf: f64,
}

/// BLEU and chrF of hypothesis against reference for every unit.
///
/// Units missing a hypothesis or reference are reported by id.
pub fn score_units(units: &[TranslationUnit], bleu: &BleuConfig, chrf_cfg: &ChrfConfig) -> Result<Vec<MetricRow>, (String, MetricError)> {
    units
        .par_iter()
        .map(|u| {
            let fail = |e| (u.id.clone(), e);
            let reference = u.reference.as_deref().unwrap_or("");
            let hyp = u.hypothesis_text();
            Ok(MetricRow {
                unit_id: u.id.clone(),
                bleu: sentence_bleu(hyp, reference, bleu).map_err(fail)?,
                chrf: chrf(hyp, reference, chrf_cfg).map_err(fail)?,
            })
        })
        .collect()
}
