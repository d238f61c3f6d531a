//! File loading shared by the subcommands.

use std::collections::HashSet;
use std::fs;
use std::path::Path;

use anyhow::{anyhow, bail, Context, Result};
use mqm_core::corpus::{load_records, DatasetRecord, InputFormat};
use mqm_core::model::{Corpus, MqmScore, TranslationUnit, UnitAnnotation};
use mqm_core::parser::{parse_document, AnnotatedBlock};
use mqm_core::rank_stats::ScoreRow;
use mqm_core::regressor::LabeledUnit;
use mqm_core::score_unit;

pub fn read_text(path: &Path) -> Result<String> {
    fs::read_to_string(path).with_context(|| format!("{}: cannot read", path.display()))
}

fn is_jsonl(path: &Path) -> bool {
    matches!(path.extension().and_then(|e| e.to_str()), Some("jsonl" | "json" | "ndjson"))
}

/// Reads an annotation document or a JSONL dataset.
pub fn load_blocks(path: &Path) -> Result<Vec<AnnotatedBlock>> {
    let text = read_text(path)?;
    parse_document(&text).with_context(|| path.display().to_string())
}

/// Annotated units from either an annotation document (`.mqm`, `.txt`) or JSONL
/// records with an `errors` field. Records without annotations are skipped.
pub fn load_annotated(path: &Path, corpus: Corpus) -> Result<Vec<(TranslationUnit, UnitAnnotation)>> {
    if is_jsonl(path) {
        let records = load_records(path, InputFormat::Jsonl, corpus).with_context(|| path.display().to_string())?;
        Ok(records.into_iter().filter_map(|r| r.annotation().map(|a| (r.unit, a))).collect())
    } else {
        Ok(load_blocks(path)?.into_iter().map(|b| (b.to_unit(corpus), b.annotation)).collect())
    }
}

pub fn load_dataset(path: &Path, corpus: Corpus) -> Result<Vec<DatasetRecord>> {
    let format = InputFormat::from_path(path);
    load_records(path, format, corpus).with_context(|| path.display().to_string())
}

/// Labeled units for training or evaluation; unlabeled records are skipped.
pub fn load_labeled(path: &Path, corpus: Corpus) -> Result<Vec<LabeledUnit>> {
    let records = load_dataset(path, corpus)?;
    let total = records.len();
    let mut out = Vec::with_capacity(total);
    for r in &records {
        if let Some(l) = r.labeled().with_context(|| format!("{}: unit `{}`", path.display(), r.unit.id))? {
            out.push(l);
        }
    }
    if out.len() < total {
        log::warn!("{}: {} of {} records carry no annotation or score and were skipped", path.display(), total - out.len(), total);
    }
    if out.is_empty() {
        bail!("{}: no labeled records", path.display());
    }
    Ok(out)
}

pub fn score_rows(path: &Path, corpus: Corpus) -> Result<Vec<ScoreRow>> {
    load_annotated(path, corpus)?
        .into_iter()
        .map(|(_, a)| {
            let s: MqmScore = score_unit(&a).with_context(|| path.display().to_string())?;
            Ok(ScoreRow { unit_id: a.unit_id.clone(), scores: s.dimensions().map(f64::from) })
        })
        .collect()
}

/// A numeric table: header names plus columns of values.
#[derive(Debug, Clone)]
pub struct Table {
    pub names: Vec<String>,
    pub columns: Vec<Vec<f64>>,
}

impl Table {
    pub fn column(&self, name: &str) -> Option<&[f64]> {
        self.names.iter().position(|n| n == name).map(|i| self.columns[i].as_slice())
    }
}

/// Reads numeric columns from TSV/CSV (with a header row) or JSONL objects.
/// Non-numeric columns are dropped.
pub fn load_table(path: &Path) -> Result<Table> {
    let text = read_text(path)?;
    let (names, rows): (Vec<String>, Vec<Vec<Option<f64>>>) = if is_jsonl(path) {
        let mut names: Vec<String> = Vec::new();
        let mut objects = Vec::new();
        for (i, line) in text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty()) {
            let v: serde_json::Map<String, serde_json::Value> =
                serde_json::from_str(line).with_context(|| format!("{}:{}", path.display(), i + 1))?;
            for k in v.keys() {
                if !names.contains(k) {
                    names.push(k.clone());
                }
            }
            objects.push(v);
        }
        let rows = objects.iter().map(|o| names.iter().map(|n| o.get(n).and_then(|v| v.as_f64())).collect()).collect();
        (names, rows)
    } else {
        let delimiter = if path.extension().and_then(|e| e.to_str()) == Some("csv") { b',' } else { b'\t' };
        let mut reader = csv::ReaderBuilder::new().delimiter(delimiter).from_reader(text.as_bytes());
        let names: Vec<String> = reader.headers().with_context(|| path.display().to_string())?.iter().map(str::to_string).collect();
        let mut rows = Vec::new();
        for (i, rec) in reader.records().enumerate() {
            let rec = rec.with_context(|| format!("{}:{}", path.display(), i + 2))?;
            rows.push(rec.iter().map(|c| c.trim().parse::<f64>().ok()).collect());
        }
        (names, rows)
    };
    let mut out = Table { names: Vec::new(), columns: Vec::new() };
    for (j, name) in names.into_iter().enumerate() {
        let col: Option<Vec<f64>> = rows.iter().map(|r| r.get(j).copied().flatten()).collect();
        if let Some(col) = col {
            out.names.push(name);
            out.columns.push(col);
        }
    }
    Ok(out)
}

pub fn parse_list<T: std::str::FromStr>(s: &str) -> Result<Vec<T>>
where
    T::Err: std::fmt::Display,
{
    s.split(',').filter(|p| !p.trim().is_empty()).map(|p| p.trim().parse::<T>().map_err(|e| anyhow!("`{p}`: {e}"))).collect()
}

pub fn unique_ids<'a>(ids: impl Iterator<Item = &'a str>) -> Result<()> {
    let mut seen = HashSet::new();
    for id in ids {
        if !seen.insert(id) {
            bail!("duplicate unit id `{id}`");
        }
    }
    Ok(())
}
