//! Kendall rank correlation, its significance, correlation matrices and
//! annotator agreement.
//!
//! Pair counts are exact integers computed in `O(n log n)` (sort by `x`,
//! then count inversions of `y` with a merge sort). Two normalisations are
//! offered: [`TauVariant::Gamma`] divides `C - D` by `C + D`, so tied pairs
//! leave the denominator; [`TauVariant::TauB`] applies the usual tie
//! correction `sqrt((n0 - n1)(n0 - n2))`.

use std::collections::HashMap;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};
use statrs::function::erf::erfc;
use thiserror::Error;

use crate::model::Dimension;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum TauVariant {
    /// `(C - D) / (C + D)`: tied pairs drop out (Goodman-Kruskal gamma)
    #[default]
    Gamma,
    /// `(C - D) / sqrt((n0 - n1)(n0 - n2))`
    TauB,
}

impl TauVariant {
    pub fn label(self) -> &'static str {
        match self {
            TauVariant::Gamma => "gamma",
            TauVariant::TauB => "tau_b",
        }
    }
}

impl std::str::FromStr for TauVariant {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().replace(['-', '_'], "").as_str() {
            "gamma" => Ok(TauVariant::Gamma),
            "taub" | "b" => Ok(TauVariant::TauB),
            _ => Err(format!("unknown tau variant `{s}` (expected gamma or tau-b)")),
        }
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum RankError {
    #[error("inputs differ in length ({0} vs {1})")]
    LengthMismatch(usize, usize),
    #[error("need at least 2 observations, got {0}")]
    TooFewObservations(usize),
    #[error("non-finite value at position {0}")]
    NonFinite(usize),
    #[error("tau is undefined: {0}")]
    DegenerateInput(String),
    #[error("significance needs n >= {min}, got {n}")]
    SampleTooSmall { n: usize, min: usize },
    #[error("score tables are not aligned: {0}")]
    Alignment(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorrelationResult {
    pub tau: f64,
    pub concordant: u64,
    pub discordant: u64,
    /// Pairs tied in `x` (including those tied in both).
    pub tied_x: u64,
    /// Pairs tied in `y` (including those tied in both).
    pub tied_y: u64,
    pub tied_both: u64,
    pub n: usize,
    pub variant: TauVariant,
    pub p_value: Option<f64>,
    pub stars: String,
}

impl CorrelationResult {
    pub fn total_pairs(&self) -> u64 {
        pairs(self.n as u64)
    }

    /// `0.17***` style rendering.
    pub fn formatted(&self) -> String {
        format!("{:.2}{}", self.tau, self.stars)
    }
}

fn pairs(t: u64) -> u64 {
    t * t.saturating_sub(1) / 2
}

fn check_inputs(x: &[f64], y: &[f64]) -> Result<(), RankError> {
    if x.len() != y.len() {
        return Err(RankError::LengthMismatch(x.len(), y.len()));
    }
    if x.len() < 2 {
        return Err(RankError::TooFewObservations(x.len()));
    }
    if let Some(i) = x.iter().zip(y).position(|(a, b)| !a.is_finite() || !b.is_finite()) {
        return Err(RankError::NonFinite(i));
    }
    Ok(())
}

/// Sum of `t(t-1)/2` over runs of equal consecutive elements.
fn tie_pairs<T>(sorted: &[T], eq: impl Fn(&T, &T) -> bool) -> u64 {
    let mut total = 0;
    let mut run = 1u64;
    for w in sorted.windows(2) {
        if eq(&w[0], &w[1]) {
            run += 1;
        } else {
            total += pairs(run);
            run = 1;
        }
    }
    total + pairs(run)
}

/// Sorts `v` ascending and returns the number of strict inversions.
fn merge_sort_inversions(v: &mut [f64], buf: &mut Vec<f64>) -> u64 {
    let n = v.len();
    if n < 2 {
        return 0;
    }
    let mid = n / 2;
    let mut swaps = merge_sort_inversions(&mut v[..mid], buf) + merge_sort_inversions(&mut v[mid..], buf);
    buf.clear();
    let (mut i, mut j) = (0, mid);
    while i < mid && j < n {
        // equal elements are not inversions: take from the left first
        if v[j] < v[i] {
            buf.push(v[j]);
            swaps += (mid - i) as u64;
            j += 1;
        } else {
            buf.push(v[i]);
            i += 1;
        }
    }
    buf.extend_from_slice(&v[i..mid]);
    buf.extend_from_slice(&v[j..]);
    v.copy_from_slice(buf);
    swaps
}

/// Kendall's tau between `x` and `y`.
pub fn kendall_tau(x: &[f64], y: &[f64], variant: TauVariant) -> Result<CorrelationResult, RankError> {
    check_inputs(x, y)?;
    let n = x.len();
    // `+ 0.0` folds -0.0 into 0.0 so total_cmp agrees with ==
    let mut pts: Vec<(f64, f64)> = x.iter().zip(y).map(|(a, b)| (a + 0.0, b + 0.0)).collect();
    pts.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.total_cmp(&b.1)));

    let n0 = pairs(n as u64);
    let n1 = tie_pairs(&pts, |a, b| a.0 == b.0);
    let n3 = tie_pairs(&pts, |a, b| a.0 == b.0 && a.1 == b.1);
    let mut ys: Vec<f64> = pts.iter().map(|p| p.1).collect();
    let mut buf = Vec::with_capacity(n);
    let discordant = merge_sort_inversions(&mut ys, &mut buf);
    let n2 = tie_pairs(&ys, |a, b| a == b);
    let concordant = n0 + n3 - n1 - n2 - discordant;

    let numerator = concordant as f64 - discordant as f64;
    let tau = match variant {
        TauVariant::Gamma => {
            let denom = concordant + discordant;
            if denom == 0 {
                return Err(RankError::DegenerateInput("every pair is tied in at least one coordinate".into()));
            }
            numerator / denom as f64
        }
        TauVariant::TauB => {
            let denom = ((n0 - n1) as f64 * (n0 - n2) as f64).sqrt();
            if denom == 0.0 {
                return Err(RankError::DegenerateInput("one input is constant".into()));
            }
            numerator / denom
        }
    };

    Ok(CorrelationResult {
        tau: tau.clamp(-1.0, 1.0),
        concordant,
        discordant,
        tied_x: n1,
        tied_y: n2,
        tied_both: n3,
        n,
        variant,
        p_value: None,
        stars: String::new(),
    })
}

pub const MIN_SIGNIFICANCE_N: usize = 10;

/// Significance stars for a two-sided p-value.
pub fn stars_for(p: f64) -> &'static str {
    if p < 0.001 {
        "***"
    } else if p < 0.01 {
        "**"
    } else if p < 0.05 {
        "*"
    } else {
        ""
    }
}

/// Normal-approximation z statistic for tau under independence.
pub fn tau_z(tau: f64, n: usize) -> f64 {
    let n = n as f64;
    3.0 * tau * (n * (n - 1.0)).sqrt() / (2.0 * (2.0 * n + 5.0)).sqrt()
}

/// Fills in the two-sided p-value and stars using the normal approximation.
pub fn tau_significance(mut result: CorrelationResult) -> Result<CorrelationResult, RankError> {
    if result.n < MIN_SIGNIFICANCE_N {
        return Err(RankError::SampleTooSmall { n: result.n, min: MIN_SIGNIFICANCE_N });
    }
    let z = tau_z(result.tau, result.n);
    let p = erfc(z.abs() / std::f64::consts::SQRT_2).clamp(0.0, 1.0);
    result.p_value = Some(p);
    result.stars = stars_for(p).to_string();
    Ok(result)
}

/// Significance when the sample is large enough, otherwise the bare result.
fn with_optional_significance(result: CorrelationResult) -> CorrelationResult {
    if result.n >= MIN_SIGNIFICANCE_N {
        tau_significance(result).expect("n checked")
    } else {
        result
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NamedColumn {
    pub name: String,
    pub values: Vec<f64>,
    /// Negate before correlating (higher-is-better metrics against MQM penalties).
    #[serde(default)]
    pub inverse: bool,
}

impl NamedColumn {
    pub fn new(name: impl Into<String>, values: Vec<f64>) -> Self {
        Self { name: name.into(), values, inverse: false }
    }

    pub fn inverted(mut self) -> Self {
        self.inverse = true;
        self
    }

    fn effective(&self) -> Vec<f64> {
        if self.inverse {
            self.values.iter().map(|v| -v).collect()
        } else {
            self.values.clone()
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorrelationMatrix {
    pub names: Vec<String>,
    pub variant: TauVariant,
    /// Symmetric, `cells[i][j]` correlates column `i` with column `j`.
    pub cells: Vec<Vec<CorrelationResult>>,
}

fn diagonal(n: usize, values: &[f64], variant: TauVariant) -> CorrelationResult {
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let ties = tie_pairs(&sorted, |a, b| a == b);
    CorrelationResult {
        tau: 1.0,
        concordant: pairs(n as u64) - ties,
        discordant: 0,
        tied_x: ties,
        tied_y: ties,
        tied_both: ties,
        n,
        variant,
        p_value: None,
        stars: String::new(),
    }
}

pub fn correlation_matrix(columns: &[NamedColumn], variant: TauVariant) -> Result<CorrelationMatrix, RankError> {
    let values: Vec<Vec<f64>> = columns.iter().map(NamedColumn::effective).collect();
    let k = columns.len();
    let mut cells: Vec<Vec<Option<CorrelationResult>>> = vec![vec![None; k]; k];
    for i in 0..k {
        check_inputs(&values[i], &values[0])?;
        cells[i][i] = Some(diagonal(values[i].len(), &values[i], variant));
        for j in 0..i {
            let r = with_optional_significance(kendall_tau(&values[i], &values[j], variant)?);
            cells[j][i] = Some(r.clone());
            cells[i][j] = Some(r);
        }
    }
    Ok(CorrelationMatrix {
        names: columns.iter().map(|c| c.name.clone()).collect(),
        variant,
        cells: cells.into_iter().map(|row| row.into_iter().map(Option::unwrap).collect()).collect(),
    })
}

impl CorrelationMatrix {
    /// Lower-triangular table in the `0.29***` notation.
    pub fn to_text(&self) -> String {
        let width = self.names.iter().map(|n| n.chars().count()).max().unwrap_or(0).max(8);
        let mut out = String::new();
        write!(out, "{:<width$}", "").unwrap();
        for name in &self.names {
            write!(out, "  {name:<width$}").unwrap();
        }
        out.push('\n');
        for (i, name) in self.names.iter().enumerate() {
            write!(out, "{name:<width$}").unwrap();
            for j in 0..=i {
                let cell = if i == j { "1".to_string() } else { self.cells[i][j].formatted() };
                write!(out, "  {cell:<width$}").unwrap();
            }
            out.truncate(out.trim_end().len());
            out.push('\n');
        }
        out
    }
}

/// Per-unit accuracy/fluency/style scores from one annotator.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoreRow {
    pub unit_id: String,
    pub scores: [f64; 3],
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DimensionAgreement {
    pub dimension: Dimension,
    pub result: CorrelationResult,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AgreementReport {
    pub validators: usize,
    pub dimensions: Vec<DimensionAgreement>,
}

/// Correlates the primary annotator against the per-unit mean of the
/// validators, dimension by dimension.
pub fn agreement_report(primary: &[ScoreRow], validators: &[Vec<ScoreRow>], variant: TauVariant) -> Result<AgreementReport, RankError> {
    if validators.is_empty() {
        return Err(RankError::Alignment("no validator tables".into()));
    }
    let mut index: HashMap<&str, usize> = HashMap::with_capacity(primary.len());
    for (i, row) in primary.iter().enumerate() {
        if index.insert(row.unit_id.as_str(), i).is_some() {
            return Err(RankError::Alignment(format!("duplicate unit id `{}` in primary", row.unit_id)));
        }
    }

    let mut sums = vec![[0.0f64; 3]; primary.len()];
    for (v, table) in validators.iter().enumerate() {
        if table.len() != primary.len() {
            return Err(RankError::Alignment(format!("validator {} has {} units, primary has {}", v + 1, table.len(), primary.len())));
        }
        let mut seen = vec![false; primary.len()];
        for row in table {
            let &i = index
                .get(row.unit_id.as_str())
                .ok_or_else(|| RankError::Alignment(format!("validator {} has unknown unit `{}`", v + 1, row.unit_id)))?;
            if std::mem::replace(&mut seen[i], true) {
                return Err(RankError::Alignment(format!("validator {} repeats unit `{}`", v + 1, row.unit_id)));
            }
            for (sum, score) in sums[i].iter_mut().zip(row.scores) {
                *sum += score;
            }
        }
    }

    let k = validators.len() as f64;
    let dimensions = Dimension::ALL
        .into_iter()
        .map(|dim| {
            let d = dim.index();
            let p: Vec<f64> = primary.iter().map(|r| r.scores[d]).collect();
            let avg: Vec<f64> = sums.iter().map(|s| s[d] / k).collect();
            kendall_tau(&p, &avg, variant).map(|r| DimensionAgreement { dimension: dim, result: with_optional_significance(r) })
        })
        .collect::<Result<Vec<_>, _>>()?;
    Ok(AgreementReport { validators: validators.len(), dimensions })
}

impl AgreementReport {
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let labels: Vec<_> = self.dimensions.iter().map(|d| d.dimension.label()).collect();
        writeln!(out, "{}", labels.iter().map(|l| format!("{l:<10}")).collect::<String>().trim_end()).unwrap();
        let cells: String = self.dimensions.iter().map(|d| format!("{:<10}", d.result.formatted())).collect();
        writeln!(out, "{}", cells.trim_end()).unwrap();
        out
    }
}
