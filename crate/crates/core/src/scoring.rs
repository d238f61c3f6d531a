//! Conversion of error annotations into MQM penalty scores.
//!
//! For each dimension `d`, `S_d = 5 * major_units + 1 * minor_units`, and
//! the total is the sum over accuracy, fluency and style. Accuracy and
//! fluency errors count words (whitespace tokens, punctuation attached);
//! style errors count one unit per annotated span.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::{Dimension, ErrorCounts, MqmScore, Severity, SubErrorType, UnitAnnotation, Violation};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SeverityWeights {
    pub major: u32,
    pub minor: u32,
}

impl Default for SeverityWeights {
    fn default() -> Self {
        Self { major: Severity::Major.weight(), minor: Severity::Minor.weight() }
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
#[error("invalid annotation for `{unit_id}`: {}", .violations.iter().map(|v| v.to_string()).collect::<Vec<_>>().join("; "))]
pub struct InvalidAnnotation {
    pub unit_id: String,
    pub violations: Vec<Violation>,
}

pub fn count_errors(ann: &UnitAnnotation, dimension: Dimension) -> ErrorCounts {
    let mut counts = ErrorCounts::default();
    for error in ann.in_dimension(dimension) {
        let units = match dimension {
            Dimension::Style => 1,
            Dimension::Accuracy | Dimension::Fluency => error.word_count(),
        };
        match error.severity {
            Severity::Major => counts.major_units += units,
            Severity::Minor => counts.minor_units += units,
        }
    }
    counts
}

pub fn score_unit(ann: &UnitAnnotation) -> Result<MqmScore, InvalidAnnotation> {
    score_unit_with(ann, SeverityWeights::default())
}

pub fn score_unit_with(ann: &UnitAnnotation, weights: SeverityWeights) -> Result<MqmScore, InvalidAnnotation> {
    let violations = ann.intrinsic_violations();
    if !violations.is_empty() {
        return Err(InvalidAnnotation { unit_id: ann.unit_id.clone(), violations });
    }
    let [a, f, s] = Dimension::ALL.map(|d| {
        let c = count_errors(ann, d);
        weights.major * c.major_units + weights.minor * c.minor_units
    });
    Ok(MqmScore::from_dimensions(a, f, s))
}

/// Fixed-width histogram bin `[lower, upper)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HistogramBin {
    pub lower: u32,
    pub upper: u32,
    pub count: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DimensionSummary {
    pub dimension: String,
    pub mean: Option<f64>,
    pub median: Option<f64>,
    pub histogram: Vec<HistogramBin>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UnitScore {
    pub unit_id: String,
    #[serde(flatten)]
    pub score: MqmScore,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ErrorTypeFrequency {
    pub dimension: Dimension,
    pub subtype: SubErrorType,
    pub count: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoreReport {
    pub units: Vec<UnitScore>,
    /// accuracy, fluency, style, total
    pub summaries: Vec<DimensionSummary>,
    /// Every (dimension, subtype) pair observed, most frequent first.
    pub error_types: Vec<ErrorTypeFrequency>,
}

#[derive(Debug, Error)]
#[error("{} unit(s) failed to score: {}", .failures.len(), .failures.iter().map(|f| f.to_string()).collect::<Vec<_>>().join("; "))]
pub struct DatasetScoreError {
    pub failures: Vec<InvalidAnnotation>,
}

pub const HISTOGRAM_BIN_WIDTH: u32 = 5;

fn summarize(label: &str, values: &[u32]) -> DimensionSummary {
    if values.is_empty() {
        return DimensionSummary { dimension: label.to_string(), mean: None, median: None, histogram: Vec::new() };
    }
    let n = values.len();
    let mean = values.iter().map(|&v| v as f64).sum::<f64>() / n as f64;
    let mut sorted = values.to_vec();
    sorted.sort_unstable();
    let median = if n % 2 == 1 { sorted[n / 2] as f64 } else { (sorted[n / 2 - 1] as f64 + sorted[n / 2] as f64) / 2.0 };
    let max = *sorted.last().unwrap();
    let bins = (max / HISTOGRAM_BIN_WIDTH + 1) as usize;
    let mut histogram: Vec<HistogramBin> =
        (0..bins as u32).map(|k| HistogramBin { lower: k * HISTOGRAM_BIN_WIDTH, upper: (k + 1) * HISTOGRAM_BIN_WIDTH, count: 0 }).collect();
    for &v in values {
        histogram[(v / HISTOGRAM_BIN_WIDTH) as usize].count += 1;
    }
    DimensionSummary { dimension: label.to_string(), mean: Some(mean), median: Some(median), histogram }
}

/// Scores every unit and aggregates. All invalid units are reported together.
pub fn score_dataset(anns: &[UnitAnnotation]) -> Result<ScoreReport, DatasetScoreError> {
    let mut units = Vec::with_capacity(anns.len());
    let mut failures = Vec::new();
    for ann in anns {
        match score_unit(ann) {
            Ok(score) => units.push(UnitScore { unit_id: ann.unit_id.clone(), score }),
            Err(e) => failures.push(e),
        }
    }
    if !failures.is_empty() {
        return Err(DatasetScoreError { failures });
    }

    let column = |f: fn(&MqmScore) -> u32| units.iter().map(|u| f(&u.score)).collect::<Vec<_>>();
    let summaries = vec![
        summarize("accuracy", &column(|s| s.accuracy)),
        summarize("fluency", &column(|s| s.fluency)),
        summarize("style", &column(|s| s.style)),
        summarize("total", &column(|s| s.total)),
    ];

    let mut freq: BTreeMap<(Dimension, SubErrorType), usize> = BTreeMap::new();
    for error in anns.iter().flat_map(|a| &a.errors) {
        *freq.entry((error.dimension, error.subtype)).or_default() += 1;
    }
    let mut error_types: Vec<_> =
        freq.into_iter().map(|((dimension, subtype), count)| ErrorTypeFrequency { dimension, subtype, count }).collect();
    // stable: ties keep taxonomy order
    error_types.sort_by_key(|e| std::cmp::Reverse(e.count));

    Ok(ScoreReport { units, summaries, error_types })
}

impl ScoreReport {
    pub fn top_error_types(&self, k: usize) -> &[ErrorTypeFrequency] {
        &self.error_types[..k.min(self.error_types.len())]
    }

    /// Plain-text rendering: a per-unit table followed by aggregates.
    pub fn to_text(&self) -> String {
        self.to_text_with_top(5)
    }

    /// As [`Self::to_text`], listing the `top` most frequent error types.
    pub fn to_text_with_top(&self, top: usize) -> String {
        let id_width = self.units.iter().map(|u| u.unit_id.chars().count()).max().unwrap_or(4).max(4);
        let mut out = String::new();
        writeln!(out, "{:<id_width$}  {:>8}  {:>7}  {:>5}  {:>5}", "unit", "accuracy", "fluency", "style", "total").unwrap();
        for u in &self.units {
            let s = &u.score;
            writeln!(out, "{:<id_width$}  {:>8}  {:>7}  {:>5}  {:>5}", u.unit_id, s.accuracy, s.fluency, s.style, s.total).unwrap();
        }
        out.push('\n');
        let fmt = |v: Option<f64>| v.map_or("-".to_string(), |v| format!("{v:.2}"));
        writeln!(out, "{:<9}  {:>7}  {:>7}", "dimension", "mean", "median").unwrap();
        for s in &self.summaries {
            writeln!(out, "{:<9}  {:>7}  {:>7}", s.dimension, fmt(s.mean), fmt(s.median)).unwrap();
        }
        if !self.error_types.is_empty() {
            out.push_str("\nmost frequent error types\n");
            for f in self.top_error_types(top) {
                writeln!(out, "  {:<9} {:<18} {}", f.dimension.label(), f.subtype.canonical_name(), f.count).unwrap();
            }
        }
        out
    }
}
