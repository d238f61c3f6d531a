//! Synthetic data generators for fixtures and tests.
//!
//! [`annotated_units`] builds English sources, mock Korean references, and
//! hypotheses with injected errors whose annotations are known exactly.
//! [`linear_fixture`] builds feature rows whose gold scores are a linear
//! function of the features plus Gaussian noise.

use rand::seq::IndexedRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::corpus::DatasetRecord;
use crate::experiments::ExperimentSample;
use crate::features::{QE_FEATURES, REFERENCE_FEATURES};
use crate::model::{Corpus, Dimension, ErrorAnnotation, Severity, SpanSide, SubErrorType, TranslationUnit, UnitAnnotation};
use crate::provider::{MockProvider, Provider};
use crate::scoring::score_unit;

const NOUNS: &[&str] = &[
    "report",
    "photograph",
    "village",
    "protest",
    "government",
    "festival",
    "river",
    "school",
    "market",
    "journalist",
    "community",
    "election",
    "border",
    "harvest",
    "museum",
    "network",
    "refugee",
    "bridge",
    "library",
    "hospital",
];
const VERBS: &[&str] =
    &["matches", "describes", "supports", "questions", "follows", "celebrates", "changes", "reaches", "protects", "reveals"];
const ADJECTIVES: &[&str] = &["small", "local", "recent", "quiet", "famous", "remote", "public", "young", "crowded", "official"];
const NAMES: &[&str] = &["Kareem", "Fahim", "Twitter", "Guinea", "Tunisia", "Seoul", "Lagos", "Amara", "Facebook", "Nilin"];
const TED_OPENERS: &[&str] = &["I think", "We believe", "You know,", "I remember when", "We learned that"];
const GV_OPENERS: &[&str] = &["According to the", "Last week the", "In the", "Reports say the", "Since then the"];

fn sentence(rng: &mut ChaCha8Rng, corpus: Corpus) -> String {
    let openers = match corpus {
        Corpus::GlobalVoices => GV_OPENERS,
        Corpus::TedTalks2020 => TED_OPENERS,
    };
    let mut words: Vec<String> = openers.choose(rng).unwrap().split(' ').map(str::to_string).collect();
    let clauses = rng.random_range(1..=3);
    for c in 0..clauses {
        if c > 0 {
            words.push(["and", "while", "because"].choose(rng).unwrap().to_string());
            words.push("the".into());
        }
        if rng.random_bool(0.5) {
            words.push(ADJECTIVES.choose(rng).unwrap().to_string());
        }
        words.push(NOUNS.choose(rng).unwrap().to_string());
        words.push(VERBS.choose(rng).unwrap().to_string());
        if rng.random_bool(0.4) {
            words.push(NAMES.choose(rng).unwrap().to_string());
        }
        if rng.random_bool(0.2) {
            words.push(rng.random_range(1990..2024).to_string());
        }
        words.push(NOUNS.choose(rng).unwrap().to_string());
    }
    let mut s = words.join(" ");
    s.push('.');
    s
}

fn severity(rng: &mut ChaCha8Rng) -> Severity {
    if rng.random_bool(0.45) {
        Severity::Major
    } else {
        Severity::Minor
    }
}

fn is_plain(token: &str) -> bool {
    token.chars().all(crate::features::is_hangul)
}

/// Generates `per_corpus` units for each corpus, each with a mock reference,
/// an error-injected hypothesis, its exact annotation, and its score.
pub fn annotated_units(per_corpus: usize, seed: u64) -> Vec<DatasetRecord> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mock = MockProvider;
    let mut out = Vec::with_capacity(per_corpus * 2);
    for i in 0..per_corpus * 2 {
        let corpus = if i % 2 == 0 { Corpus::GlobalVoices } else { Corpus::TedTalks2020 };
        let id = format!("{}-{}", corpus.short_code(), i / 2 + 1);
        let source = sentence(&mut rng, corpus);
        let reference = mock.translate(&source).expect("mock translation");
        let src_words: Vec<&str> = source.split_whitespace().collect();
        let mut hyp: Vec<String> = reference.split_whitespace().map(str::to_string).collect();
        let mut errors = Vec::new();
        // token positions already touched, so spans never overlap
        let mut used = vec![false; hyp.len()];
        let n_errors = [0, 0, 1, 1, 1, 2, 2, 3].choose(&mut rng).copied().unwrap();
        let mut inserted = 0usize;
        for _ in 0..n_errors {
            let free: Vec<usize> = (0..hyp.len()).filter(|&k| !used[k] && is_plain(&hyp[k])).collect();
            let Some(&k) = free.choose(&mut rng) else { break };
            used[k] = true;
            let roll: f64 = rng.random();
            let sev = severity(&mut rng);
            if roll < 0.40 {
                let replacement = mock.translate(NOUNS.choose(&mut rng).unwrap()).unwrap() + "을";
                hyp[k] = replacement.clone();
                errors.push(ErrorAnnotation::new(Dimension::Accuracy, SubErrorType::Mistranslation, sev, replacement));
            } else if roll < 0.55 {
                let english = src_words[k.min(src_words.len() - 1)].trim_end_matches('.').to_string();
                if english.chars().any(|c| !c.is_ascii_alphabetic()) || english.is_empty() {
                    used[k] = false;
                    continue;
                }
                hyp[k] = english.clone();
                errors.push(ErrorAnnotation::new(Dimension::Accuracy, SubErrorType::UntranslatedText, sev, english.clone()));
                errors.push(ErrorAnnotation::new(Dimension::Fluency, SubErrorType::UntranslatedText, sev, english));
            } else if roll < 0.70 {
                let word = hyp[k].clone();
                let mut chars: Vec<char> = word.chars().collect();
                chars.reverse();
                let odd: String = chars.into_iter().collect::<String>() + "요";
                hyp[k] = odd.clone();
                errors.push(ErrorAnnotation::new(Dimension::Fluency, SubErrorType::Unnaturalness, sev, odd));
            } else if roll < 0.80 && inserted == 0 && k < src_words.len() {
                // omission: drop the token and point at the source word
                let word = src_words[k].trim_end_matches('.');
                if word.is_empty() || source.matches(word).count() != 1 {
                    used[k] = false;
                    continue;
                }
                hyp[k] = String::new();
                errors.push(ErrorAnnotation::new(Dimension::Accuracy, SubErrorType::Omission, sev, word).on_source());
            } else if roll < 0.90 {
                let extra = format!("{}{}", mock.translate(ADJECTIVES.choose(&mut rng).unwrap()).unwrap(), "한");
                hyp.insert(k, extra.clone());
                used.insert(k, true);
                inserted += 1;
                errors.push(ErrorAnnotation::new(Dimension::Accuracy, SubErrorType::Addition, sev, extra));
            } else {
                let word = format!("{}..", hyp[k]);
                hyp[k] = word.clone();
                errors.push(ErrorAnnotation::new(Dimension::Fluency, SubErrorType::Punctuation, sev, word));
            }
        }
        let mut hypothesis = hyp.into_iter().filter(|t| !t.is_empty()).collect::<Vec<_>>().join(" ");
        if rng.random_bool(0.2) {
            // awkward structure: trailing clause marker
            hypothesis.push_str(" 것입니다");
            errors.push(ErrorAnnotation::new(Dimension::Style, SubErrorType::Structure, severity(&mut rng), hypothesis.clone()));
        } else if rng.random_bool(0.08) {
            hypothesis.push_str(" 했어");
            errors.push(ErrorAnnotation::new(Dimension::Style, SubErrorType::Formality, Severity::Minor, "했어"));
        }
        // spans must be unambiguous substrings of their side
        errors.retain(|e| {
            let text = if e.span_side == SpanSide::Source { &source } else { &hypothesis };
            text.contains(&e.span_text)
        });
        let unit = TranslationUnit::new(id.clone(), corpus, source, Some(reference), hypothesis);
        let mut record = DatasetRecord::from_unit(unit);
        let ann = UnitAnnotation::new(id, errors);
        let score = score_unit(&ann).expect("generated annotation is valid");
        record.errors = Some(ann.errors);
        record.score = Some(score);
        out.push(record);
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinearFixtureConfig {
    pub per_corpus: usize,
    pub noise_sigma: f64,
    /// Add a common component to all three dimension targets.
    pub shared_signal: bool,
    pub seed: u64,
}

impl Default for LinearFixtureConfig {
    fn default() -> Self {
        Self { per_corpus: 600, noise_sigma: 0.1, shared_signal: true, seed: 0 }
    }
}

/// Dimension weights over the 10 raw MTE features (QE first, then the
/// reference features), fixed so every run sees the same ground truth.
pub const LINEAR_WEIGHTS: [[f64; 10]; 3] = [
    [0.0, 1.5, -1.0, 0.0, 0.0, 0.5, 0.0, -2.0, -1.5, 0.8],
    [0.5, 2.0, 0.0, 1.0, -0.8, 1.2, -1.0, 0.0, 0.0, 0.0],
    [0.0, 0.0, 0.0, 0.6, 1.5, 0.0, -0.7, -0.5, 0.0, 1.0],
];
pub const LINEAR_SHARED: [f64; 10] = [0.6, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, -1.2, 0.0, 0.0];
pub const LINEAR_INTERCEPT: [f64; 3] = [10.0, 6.0, 4.0];

/// Noise-free targets for raw feature values (without bias).
pub fn linear_targets(raw: &[f64], shared_signal: bool) -> [f64; 3] {
    let dot = |w: &[f64; 10]| w.iter().zip(raw).map(|(a, b)| a * b).sum::<f64>();
    let shared = if shared_signal { dot(&LINEAR_SHARED) } else { 0.0 };
    let mut t = [0.0; 3];
    for k in 0..3 {
        t[k] = LINEAR_INTERCEPT[k] + dot(&LINEAR_WEIGHTS[k]) + shared;
    }
    t
}

/// Feature rows drawn from a standard normal, targets linear plus noise.
/// Corpora alternate, so any prefix is balanced.
pub fn linear_fixture(cfg: &LinearFixtureConfig) -> Vec<ExperimentSample> {
    let d = QE_FEATURES.len() + REFERENCE_FEATURES.len();
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let unit = Normal::new(0.0, 1.0).expect("valid normal");
    let noise = Normal::new(0.0, cfg.noise_sigma.max(0.0)).expect("valid noise");
    (0..cfg.per_corpus * 2)
        .map(|i| {
            let corpus = if i % 2 == 0 { Corpus::GlobalVoices } else { Corpus::TedTalks2020 };
            let raw: Vec<f64> = (0..d).map(|_| unit.sample(&mut rng)).collect();
            let mut gold = linear_targets(&raw, cfg.shared_signal);
            for g in gold.iter_mut() {
                *g += noise.sample(&mut rng);
            }
            let mut qe = raw[..QE_FEATURES.len()].to_vec();
            qe.push(1.0);
            let mut mte = raw;
            mte.push(1.0);
            ExperimentSample { id: format!("{}-{}", corpus.short_code(), i / 2 + 1), corpus, qe, mte, gold }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::validate_annotation;

    #[test]
    fn generated_annotations_validate() {
        let recs = annotated_units(60, 1);
        assert_eq!(recs.len(), 120);
        for r in &recs {
            let ann = r.annotation().unwrap();
            let v = validate_annotation(&r.unit, &ann);
            assert!(v.iter().all(|v| !v.is_error()), "{}: {v:?}", r.unit.id);
        }
        assert_eq!(annotated_units(60, 1), recs);
    }

    #[test]
    fn linear_fixture_is_deterministic() {
        let cfg = LinearFixtureConfig { per_corpus: 10, ..Default::default() };
        let a = linear_fixture(&cfg);
        assert_eq!(a, linear_fixture(&cfg));
        assert_eq!(a[0].mte.len(), 11);
        assert_eq!(a[0].qe.len(), 8);
        assert_eq!(&a[0].mte[..7], &a[0].qe[..7]);
    }
}
