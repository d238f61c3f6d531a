//! Hand-engineered sentence features for the quality regressors.
//!
//! The reference-free (QE) set only looks at source and hypothesis; the
//! reference-based (MTE) set appends reference-overlap features. Both end
//! with a constant `bias` component.

use std::collections::{HashMap, HashSet};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::metrics::{chrf, sentence_bleu, BleuConfig, ChrfConfig};
use crate::model::TranslationUnit;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FeatureMode {
    /// source + reference + hypothesis
    Mte,
    /// source + hypothesis
    Qe,
}

impl FeatureMode {
    pub fn label(self) -> &'static str {
        match self {
            FeatureMode::Mte => "MTE",
            FeatureMode::Qe => "QE",
        }
    }
}

impl std::str::FromStr for FeatureMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "mte" => Ok(FeatureMode::Mte),
            "qe" => Ok(FeatureMode::Qe),
            _ => Err(format!("unknown mode `{s}` (expected mte or qe)")),
        }
    }
}

pub const QE_FEATURES: [&str; 7] =
    ["hyp_src_length_ratio", "latin_ratio", "digit_agreement", "punct_diff", "mean_word_length", "repetition_rate", "hangul_ratio"];

pub const REFERENCE_FEATURES: [&str; 3] = ["chrf", "bleu", "hyp_ref_length_ratio"];

pub const BIAS_FEATURE: &str = "bias";

pub fn feature_names(mode: FeatureMode) -> Vec<&'static str> {
    let mut names = QE_FEATURES.to_vec();
    if mode == FeatureMode::Mte {
        names.extend(REFERENCE_FEATURES);
    }
    names.push(BIAS_FEATURE);
    names
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum FeatureError {
    #[error("unit `{0}` has no reference (required in MTE mode)")]
    MissingReference(String),
    #[error("unit `{0}` has no hypothesis")]
    MissingHypothesis(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureVector {
    pub mode: FeatureMode,
    pub values: Vec<f64>,
}

impl FeatureVector {
    pub fn names(&self) -> Vec<&'static str> {
        feature_names(self.mode)
    }

    pub fn get(&self, name: &str) -> Option<f64> {
        self.names().iter().position(|n| *n == name).map(|i| self.values[i])
    }

    /// Everything except the trailing bias component.
    pub fn without_bias(&self) -> &[f64] {
        &self.values[..self.values.len() - 1]
    }
}

pub fn is_latin_letter(c: char) -> bool {
    c.is_ascii_alphabetic()
        || (('\u{00C0}'..='\u{024F}').contains(&c) && c != '\u{00D7}' && c != '\u{00F7}')
        || ('\u{1E00}'..='\u{1EFF}').contains(&c)
}

pub fn is_hangul(c: char) -> bool {
    ('\u{AC00}'..='\u{D7A3}').contains(&c) || ('\u{1100}'..='\u{11FF}').contains(&c) || ('\u{3130}'..='\u{318F}').contains(&c)
}

fn is_punct(c: char) -> bool {
    c.is_ascii_punctuation() || matches!(c, '…' | '“' | '”' | '‘' | '’' | '·' | '。' | '、' | '「' | '」' | '–' | '—')
}

fn ratio(num: usize, den: usize) -> f64 {
    if den == 0 {
        0.0
    } else {
        num as f64 / den as f64
    }
}

/// Latin letters over all alphabetic characters.
pub fn latin_ratio(text: &str) -> f64 {
    let alphabetic = text.chars().filter(|c| c.is_alphabetic()).count();
    ratio(text.chars().filter(|&c| is_latin_letter(c)).count(), alphabetic)
}

fn hangul_ratio(text: &str) -> f64 {
    let visible = text.chars().filter(|c| !c.is_whitespace()).count();
    ratio(text.chars().filter(|&c| is_hangul(c)).count(), visible)
}

fn digit_runs(text: &str) -> HashMap<&str, usize> {
    let mut runs = HashMap::new();
    for run in text.split(|c: char| !c.is_ascii_digit()).filter(|r| !r.is_empty()) {
        *runs.entry(run).or_insert(0) += 1;
    }
    runs
}

/// Dice overlap of digit runs; 1 when neither side has digits.
fn digit_agreement(source: &str, hypothesis: &str) -> f64 {
    let src = digit_runs(source);
    let hyp = digit_runs(hypothesis);
    let (ns, nh): (usize, usize) = (src.values().sum(), hyp.values().sum());
    if ns + nh == 0 {
        return 1.0;
    }
    let common: usize = src.iter().map(|(k, c)| (*c).min(hyp.get(k).copied().unwrap_or(0))).sum();
    2.0 * common as f64 / (ns + nh) as f64
}

fn punct_count(text: &str) -> i64 {
    text.chars().filter(|&c| is_punct(c)).count() as i64
}

pub fn extract_features(unit: &TranslationUnit, mode: FeatureMode) -> Result<FeatureVector, FeatureError> {
    let hyp = match unit.hypothesis.as_deref() {
        Some(h) if !h.trim().is_empty() => h,
        _ => return Err(FeatureError::MissingHypothesis(unit.id.clone())),
    };
    let src = unit.source.as_str();
    let hyp_tokens: Vec<&str> = hyp.split_whitespace().collect();
    let src_tokens = src.split_whitespace().count();
    let visible_chars = hyp.chars().filter(|c| !c.is_whitespace()).count();
    let distinct: HashSet<&str> = hyp_tokens.iter().copied().collect();

    let mut values = vec![
        ratio(hyp_tokens.len(), src_tokens),
        latin_ratio(hyp),
        digit_agreement(src, hyp),
        (punct_count(hyp) - punct_count(src)) as f64,
        ratio(visible_chars, hyp_tokens.len()),
        1.0 - ratio(distinct.len(), hyp_tokens.len()),
        hangul_ratio(hyp),
    ];

    if mode == FeatureMode::Mte {
        let reference = match unit.reference.as_deref() {
            Some(r) if !r.trim().is_empty() => r,
            _ => return Err(FeatureError::MissingReference(unit.id.clone())),
        };
        let chrf_value = chrf(hyp, reference, &ChrfConfig::default()).expect("reference is non-empty");
        let bleu_value = sentence_bleu(hyp, reference, &BleuConfig::default()).expect("reference is non-empty");
        values.push(chrf_value);
        values.push(bleu_value);
        values.push(ratio(hyp_tokens.len(), reference.split_whitespace().count()));
    }
    values.push(1.0);
    Ok(FeatureVector { mode, values })
}
