//! Parallel-corpus ingestion, balanced sampling into train/validation/test,
//! and per-corpus summary statistics.

use std::collections::HashSet;
use std::fs;
use std::io::{self, Write};
use std::path::Path;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::{Corpus, ErrorAnnotation, MqmScore, TranslationUnit, UnitAnnotation};
use crate::regressor::LabeledUnit;
use crate::scoring::{score_unit, InvalidAnnotation};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum InputFormat {
    Tsv,
    Jsonl,
}

impl InputFormat {
    /// Guess from the file extension; anything but `.tsv`/`.txt` is JSONL.
    pub fn from_path(path: &Path) -> Self {
        match path.extension().and_then(|e| e.to_str()).map(str::to_ascii_lowercase).as_deref() {
            Some("tsv") | Some("txt") => InputFormat::Tsv,
            _ => InputFormat::Jsonl,
        }
    }
}

impl std::str::FromStr for InputFormat {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "tsv" => Ok(InputFormat::Tsv),
            "jsonl" => Ok(InputFormat::Jsonl),
            _ => Err(format!("unknown input format `{s}` (expected tsv or jsonl)")),
        }
    }
}

#[derive(Debug, Error)]
pub enum LoadError {
    #[error("{path}: {source}")]
    Io { path: String, source: io::Error },
    #[error("line {line}: invalid UTF-8")]
    Encoding { line: usize },
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
}

/// One line of the JSONL dataset: a unit plus optional annotation and score.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetRecord {
    #[serde(flatten)]
    pub unit: TranslationUnit,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub errors: Option<Vec<ErrorAnnotation>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub score: Option<MqmScore>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub annotator: Option<String>,
}

impl DatasetRecord {
    pub fn from_unit(unit: TranslationUnit) -> Self {
        Self { unit, errors: None, score: None, annotator: None }
    }

    pub fn annotation(&self) -> Option<UnitAnnotation> {
        self.errors.as_ref().map(|e| UnitAnnotation::new(self.unit.id.clone(), e.clone()))
    }

    /// Gold score: the stored one, else computed from the stored errors.
    pub fn gold_score(&self) -> Result<Option<MqmScore>, InvalidAnnotation> {
        if let Some(s) = self.score {
            return Ok(Some(s));
        }
        self.annotation().map(|a| score_unit(&a)).transpose()
    }

    pub fn labeled(&self) -> Result<Option<LabeledUnit>, InvalidAnnotation> {
        Ok(self.gold_score()?.map(|s| LabeledUnit::new(self.unit.clone(), s)))
    }
}

/// Anything that can be sampled into a balanced split.
pub trait Sampled {
    fn unit_id(&self) -> &str;
    fn corpus(&self) -> Corpus;
}

impl Sampled for TranslationUnit {
    fn unit_id(&self) -> &str {
        &self.id
    }
    fn corpus(&self) -> Corpus {
        self.corpus
    }
}

impl Sampled for DatasetRecord {
    fn unit_id(&self) -> &str {
        &self.unit.id
    }
    fn corpus(&self) -> Corpus {
        self.unit.corpus
    }
}

impl Sampled for LabeledUnit {
    fn unit_id(&self) -> &str {
        &self.unit.id
    }
    fn corpus(&self) -> Corpus {
        self.unit.corpus
    }
}

fn read_utf8(path: &Path) -> Result<String, LoadError> {
    let bytes = fs::read(path).map_err(|source| LoadError::Io { path: path.display().to_string(), source })?;
    String::from_utf8(bytes).map_err(|e| {
        let at = e.utf8_error().valid_up_to();
        let line = 1 + e.as_bytes()[..at].iter().filter(|&&b| b == b'\n').count();
        LoadError::Encoding { line }
    })
}

const TSV_COLUMNS: [&str; 5] = ["id", "corpus", "source", "reference", "hypothesis"];

fn non_empty(field: Option<&str>) -> Option<String> {
    field.map(str::trim).filter(|s| !s.is_empty()).map(str::to_string)
}

/// Parses TSV text. Column layout is taken from a header row when the first
/// line consists only of known column names, otherwise from the column
/// count: 2 = source, reference; 3 = + hypothesis; 4 = id first.
pub fn parse_tsv(text: &str, default_corpus: Corpus) -> Result<Vec<TranslationUnit>, LoadError> {
    let mut lines = text.lines().enumerate().map(|(i, l)| (i + 1, l)).filter(|(_, l)| !l.trim().is_empty()).peekable();
    let mut header: Option<Vec<String>> = None;
    if let Some((_, first)) = lines.peek() {
        let cols: Vec<String> = first.split('\t').map(|c| c.trim().to_ascii_lowercase()).collect();
        if cols.iter().all(|c| TSV_COLUMNS.contains(&c.as_str())) {
            header = Some(cols);
            lines.next();
        }
    }
    if let Some(h) = &header {
        if !h.iter().any(|c| c == "source") {
            return Err(LoadError::Parse { line: 1, message: "header has no `source` column".into() });
        }
    }

    let mut units = Vec::new();
    let mut seen = HashSet::new();
    for (line, raw) in lines {
        let cols: Vec<&str> = raw.split('\t').collect();
        let field = |name: &str| -> Option<&str> {
            match &header {
                Some(h) => h.iter().position(|c| c == name).and_then(|i| cols.get(i).copied()),
                None => {
                    let layout: &[&str] = match cols.len() {
                        2 => &["source", "reference"],
                        3 => &["source", "reference", "hypothesis"],
                        _ => &["id", "source", "reference", "hypothesis"],
                    };
                    layout.iter().position(|c| *c == name).and_then(|i| cols.get(i).copied())
                }
            }
        };
        if header.is_none() && !(2..=4).contains(&cols.len()) {
            return Err(LoadError::Parse { line, message: format!("expected 2-4 tab-separated columns, got {}", cols.len()) });
        }
        let corpus = match non_empty(field("corpus")) {
            Some(c) => c.parse().map_err(|e: crate::model::UnknownName| LoadError::Parse { line, message: e.to_string() })?,
            None => default_corpus,
        };
        let source = non_empty(field("source")).ok_or(LoadError::Parse { line, message: "empty source".into() })?;
        let id = non_empty(field("id")).unwrap_or_else(|| format!("{}-{line}", corpus.short_code()));
        if !seen.insert(id.clone()) {
            return Err(LoadError::Parse { line, message: format!("duplicate id `{id}`") });
        }
        units.push(TranslationUnit {
            id,
            corpus,
            source,
            reference: non_empty(field("reference")),
            hypothesis: non_empty(field("hypothesis")),
        });
    }
    Ok(units)
}

#[derive(Deserialize)]
struct RawJsonUnit {
    id: Option<String>,
    corpus: Option<Corpus>,
    source: String,
    reference: Option<String>,
    hypothesis: Option<String>,
}

pub fn parse_jsonl(text: &str, default_corpus: Corpus) -> Result<Vec<TranslationUnit>, LoadError> {
    parse_records(text, default_corpus).map(|r| r.into_iter().map(|r| r.unit).collect())
}

/// Parses dataset JSONL, keeping annotation and score fields.
pub fn parse_records(text: &str, default_corpus: Corpus) -> Result<Vec<DatasetRecord>, LoadError> {
    let mut out = Vec::new();
    let mut seen = HashSet::new();
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        if raw.trim().is_empty() {
            continue;
        }
        let parse_err = |e: serde_json::Error| LoadError::Parse { line, message: e.to_string() };
        let value: serde_json::Value = serde_json::from_str(raw).map_err(parse_err)?;
        let unit: RawJsonUnit = serde_json::from_value(value.clone()).map_err(parse_err)?;
        let corpus = unit.corpus.unwrap_or(default_corpus);
        if unit.source.trim().is_empty() {
            return Err(LoadError::Parse { line, message: "empty source".into() });
        }
        let id = unit.id.filter(|s| !s.trim().is_empty()).unwrap_or_else(|| format!("{}-{line}", corpus.short_code()));
        if !seen.insert(id.clone()) {
            return Err(LoadError::Parse { line, message: format!("duplicate id `{id}`") });
        }
        let get = |k: &str| value.get(k).cloned().filter(|v| !v.is_null());
        let errors = get("errors").map(serde_json::from_value).transpose().map_err(parse_err)?;
        let score = get("score").map(serde_json::from_value).transpose().map_err(parse_err)?;
        let annotator = get("annotator").map(serde_json::from_value).transpose().map_err(parse_err)?;
        out.push(DatasetRecord {
            unit: TranslationUnit {
                id,
                corpus,
                source: unit.source,
                reference: unit.reference.filter(|s| !s.trim().is_empty()),
                hypothesis: unit.hypothesis.filter(|s| !s.trim().is_empty()),
            },
            errors,
            score,
            annotator,
        });
    }
    Ok(out)
}

pub fn load_parallel(path: &Path, format: InputFormat, default_corpus: Corpus) -> Result<Vec<TranslationUnit>, LoadError> {
    let text = read_utf8(path)?;
    match format {
        InputFormat::Tsv => parse_tsv(&text, default_corpus),
        InputFormat::Jsonl => parse_jsonl(&text, default_corpus),
    }
}

/// Loads a dataset file; TSV input yields records without annotations.
pub fn load_records(path: &Path, format: InputFormat, default_corpus: Corpus) -> Result<Vec<DatasetRecord>, LoadError> {
    let text = read_utf8(path)?;
    match format {
        InputFormat::Tsv => Ok(parse_tsv(&text, default_corpus)?.into_iter().map(DatasetRecord::from_unit).collect()),
        InputFormat::Jsonl => parse_records(&text, default_corpus),
    }
}

pub fn records_to_jsonl(records: &[DatasetRecord]) -> String {
    let mut out = String::new();
    for r in records {
        out.push_str(&serde_json::to_string(r).expect("record serializes"));
        out.push('\n');
    }
    out
}

pub fn write_records(path: &Path, records: &[DatasetRecord]) -> io::Result<()> {
    let mut f = fs::File::create(path)?;
    f.write_all(records_to_jsonl(records).as_bytes())?;
    f.sync_all()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SplitSizes {
    pub train: usize,
    pub validation: usize,
    pub test: usize,
}

impl Default for SplitSizes {
    fn default() -> Self {
        Self { train: 1000, validation: 100, test: 100 }
    }
}

impl SplitSizes {
    pub fn total(&self) -> usize {
        self.train + self.validation + self.test
    }

    pub fn as_array(&self) -> [usize; 3] {
        [self.train, self.validation, self.test]
    }

    /// Proportionally shrunk sizes that fit `available` units (largest
    /// remainder rounding); unchanged when they already fit.
    pub fn scaled_to(&self, available: usize) -> Self {
        let total = self.total();
        if total <= available || total == 0 {
            return *self;
        }
        let parts = self.as_array();
        let mut out = [0usize; 3];
        let mut rems = [(0usize, 0usize); 3];
        for i in 0..3 {
            out[i] = parts[i] * available / total;
            rems[i] = (parts[i] * available % total, i);
        }
        let mut left = available - out.iter().sum::<usize>();
        rems.sort_by(|a, b| b.0.cmp(&a.0).then(a.1.cmp(&b.1)));
        for &(_, i) in &rems {
            if left == 0 {
                break;
            }
            out[i] += 1;
            left -= 1;
        }
        Self { train: out[0], validation: out[1], test: out[2] }
    }
}

impl std::str::FromStr for SplitSizes {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let parts: Vec<usize> =
            s.split(',').map(|p| p.trim().parse::<usize>().map_err(|e| format!("bad size `{p}`: {e}"))).collect::<Result<_, _>>()?;
        match parts.as_slice() {
            [train, validation, test] => Ok(Self { train: *train, validation: *validation, test: *test }),
            _ => Err(format!("expected three comma-separated sizes, got `{s}`")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Split<T> {
    pub train: Vec<T>,
    pub validation: Vec<T>,
    pub test: Vec<T>,
    pub seed: u64,
}

impl<T> Split<T> {
    pub fn parts(&self) -> [(&'static str, &[T]); 3] {
        [("train", &self.train), ("validation", &self.validation), ("test", &self.test)]
    }

    pub fn map<U>(self, mut f: impl FnMut(T) -> U) -> Split<U> {
        Split {
            train: self.train.into_iter().map(&mut f).collect(),
            validation: self.validation.into_iter().map(&mut f).collect(),
            test: self.test.into_iter().map(&mut f).collect(),
            seed: self.seed,
        }
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum SplitError {
    #[error("not enough {corpus} units: need {needed}, have {available}")]
    InsufficientUnits { corpus: Corpus, needed: usize, available: usize },
    #[error("duplicate unit id `{0}`")]
    DuplicateId(String),
}

/// Per-corpus counts for each part: half each, odd remainders alternating
/// between the corpora starting with Global Voices.
pub fn allocation(sizes: SplitSizes) -> [[usize; 2]; 3] {
    let mut out = [[0; 2]; 3];
    let mut odd_turn = 0;
    for (i, s) in sizes.as_array().into_iter().enumerate() {
        out[i] = [s / 2, s / 2];
        if s % 2 == 1 {
            out[i][odd_turn] += 1;
            odd_turn = 1 - odd_turn;
        }
    }
    out
}

/// Seeded per-corpus shuffle, then balanced allocation. Within each part
/// units alternate between corpora, so every prefix of a part is balanced
/// to within one unit.
pub fn sample_and_split<T: Sampled + Clone>(units: &[T], seed: u64, sizes: SplitSizes) -> Result<Split<T>, SplitError> {
    let mut seen = HashSet::new();
    for u in units {
        if !seen.insert(u.unit_id()) {
            return Err(SplitError::DuplicateId(u.unit_id().to_string()));
        }
    }
    let alloc = allocation(sizes);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut pools: Vec<Vec<&T>> = Vec::new();
    for (ci, corpus) in Corpus::ALL.into_iter().enumerate() {
        let mut pool: Vec<&T> = units.iter().filter(|u| u.corpus() == corpus).collect();
        let needed: usize = alloc.iter().map(|a| a[ci]).sum();
        if pool.len() < needed {
            return Err(SplitError::InsufficientUnits { corpus, needed, available: pool.len() });
        }
        pool.shuffle(&mut rng);
        pools.push(pool);
    }

    let mut cursor = [0usize; 2];
    let mut parts: Vec<Vec<T>> = Vec::with_capacity(3);
    for counts in alloc {
        let mut taken: [Vec<&T>; 2] = [Vec::new(), Vec::new()];
        for ci in 0..2 {
            taken[ci] = pools[ci][cursor[ci]..cursor[ci] + counts[ci]].to_vec();
            cursor[ci] += counts[ci];
        }
        // the larger side leads so prefixes never drift by more than one
        let lead = if counts[1] > counts[0] { 1 } else { 0 };
        let mut part = Vec::with_capacity(counts[0] + counts[1]);
        for k in 0..counts[0].max(counts[1]) {
            for ci in [lead, 1 - lead] {
                if let Some(u) = taken[ci].get(k) {
                    part.push((*u).clone());
                }
            }
        }
        parts.push(part);
    }
    let test = parts.pop().unwrap();
    let validation = parts.pop().unwrap();
    let train = parts.pop().unwrap();
    Ok(Split { train, validation, test, seed })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorpusSummary {
    pub corpus: Corpus,
    pub total_pairs: usize,
    pub sampled_pairs: usize,
    pub avg_source_len: Option<f64>,
    pub avg_reference_len: Option<f64>,
    pub avg_hypothesis_len: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorpusStats {
    pub corpora: Vec<CorpusSummary>,
}

fn mean_tokens<'a>(texts: impl Iterator<Item = &'a str>) -> Option<f64> {
    let (mut sum, mut n) = (0usize, 0usize);
    for t in texts {
        sum += t.split_whitespace().count();
        n += 1;
    }
    (n > 0).then(|| sum as f64 / n as f64)
}

/// Statistics of `sample`, with `total_pairs` counted over `pool`.
pub fn corpus_stats_with_pool(pool: &[TranslationUnit], sample: &[TranslationUnit]) -> CorpusStats {
    let corpora = Corpus::ALL
        .into_iter()
        .map(|corpus| {
            let units: Vec<&TranslationUnit> = sample.iter().filter(|u| u.corpus == corpus).collect();
            CorpusSummary {
                corpus,
                total_pairs: pool.iter().filter(|u| u.corpus == corpus).count(),
                sampled_pairs: units.len(),
                avg_source_len: mean_tokens(units.iter().map(|u| u.source.as_str())),
                avg_reference_len: mean_tokens(units.iter().filter_map(|u| u.reference.as_deref())),
                avg_hypothesis_len: mean_tokens(units.iter().filter_map(|u| u.hypothesis.as_deref())),
            }
        })
        .collect();
    CorpusStats { corpora }
}

pub fn corpus_stats(units: &[TranslationUnit]) -> CorpusStats {
    corpus_stats_with_pool(units, units)
}

impl CorpusStats {
    pub fn get(&self, corpus: Corpus) -> Option<&CorpusSummary> {
        self.corpora.iter().find(|c| c.corpus == corpus)
    }

    pub fn to_text(&self) -> String {
        let cell = |v: Option<f64>| v.map_or("-".to_string(), |v| format!("{v:.2}"));
        let mut out = format!("{:<16} {:>10} {:>8} {:>10} {:>10} {:>10}\n", "corpus", "total", "sampled", "src_len", "ref_len", "hyp_len");
        for c in &self.corpora {
            out.push_str(&format!(
                "{:<16} {:>10} {:>8} {:>10} {:>10} {:>10}\n",
                c.corpus.display_name(),
                c.total_pairs,
                c.sampled_pairs,
                cell(c.avg_source_len),
                cell(c.avg_reference_len),
                cell(c.avg_hypothesis_len)
            ));
        }
        out
    }
}
