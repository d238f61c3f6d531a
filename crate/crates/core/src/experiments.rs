//! Experiment harness: MTE vs QE grid, training-size curve, and
//! single- vs multi-score head comparison, each averaged over seeds.

use std::collections::BTreeMap;

use log::warn;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::{Sampled, Split};
use crate::features::{extract_features, FeatureError, FeatureMode};
use crate::model::Corpus;
use crate::rank_stats::TauVariant;
use crate::regressor::{evaluate_predictions, train_on_features, EvalError, EvalReport, Head, LabeledUnit, RegressorConfig, TrainError};

/// Precomputed features and gold dimension scores for one unit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentSample {
    pub id: String,
    pub corpus: Corpus,
    /// QE feature row, bias last.
    pub qe: Vec<f64>,
    /// MTE feature row, bias last.
    pub mte: Vec<f64>,
    pub gold: [f64; 3],
}

impl ExperimentSample {
    pub fn from_labeled(l: &LabeledUnit) -> Result<Self, FeatureError> {
        Ok(Self {
            id: l.unit.id.clone(),
            corpus: l.unit.corpus,
            qe: extract_features(&l.unit, FeatureMode::Qe)?.values,
            mte: extract_features(&l.unit, FeatureMode::Mte)?.values,
            gold: l.gold(),
        })
    }

    pub fn features(&self, mode: FeatureMode) -> &[f64] {
        match mode {
            FeatureMode::Mte => &self.mte,
            FeatureMode::Qe => &self.qe,
        }
    }
}

impl Sampled for ExperimentSample {
    fn unit_id(&self) -> &str {
        &self.id
    }
    fn corpus(&self) -> Corpus {
        self.corpus
    }
}

pub const DEFAULT_SIZES: [usize; 5] = [200, 400, 600, 800, 1000];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SuiteConfig {
    pub base: RegressorConfig,
    pub seeds: Vec<u64>,
    pub sizes: Vec<usize>,
    pub modes: Vec<FeatureMode>,
    pub variants: Vec<TauVariant>,
}

impl Default for SuiteConfig {
    fn default() -> Self {
        Self {
            base: RegressorConfig::default(),
            seeds: vec![0, 1, 2],
            sizes: DEFAULT_SIZES.to_vec(),
            modes: vec![FeatureMode::Mte, FeatureMode::Qe],
            variants: vec![TauVariant::Gamma, TauVariant::TauB],
        }
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ExperimentError {
    #[error("no requested training size fits the {available}-unit training split (smallest requested {requested})")]
    InsufficientData { requested: usize, available: usize },
    #[error("{0} split is empty")]
    EmptySplit(&'static str),
    #[error("no seeds given")]
    NoSeeds,
    #[error("{context}: {source}")]
    Train { context: String, source: TrainError },
    #[error("{context}: {source}")]
    Eval { context: String, source: EvalError },
}

/// Mean over seeds plus the per-seed values.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeedStat {
    pub mean: f64,
    pub per_seed: Vec<f64>,
}

impl SeedStat {
    fn of(values: Vec<f64>) -> Self {
        Self { mean: values.iter().sum::<f64>() / values.len() as f64, per_seed: values }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridRow {
    pub mode: FeatureMode,
    pub variant: TauVariant,
    pub accuracy: SeedStat,
    pub fluency: SeedStat,
    pub style: SeedStat,
    /// Tau of the summed prediction.
    pub overall: SeedStat,
    /// Mean of the three dimension taus.
    pub average: SeedStat,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SizePoint {
    pub mode: FeatureMode,
    pub variant: TauVariant,
    pub size: usize,
    pub accuracy: SeedStat,
    pub fluency: SeedStat,
    pub style: SeedStat,
    pub overall: SeedStat,
    pub mean_tau: SeedStat,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HeadComparison {
    pub mode: FeatureMode,
    pub variant: TauVariant,
    pub single: SeedStat,
    pub multi: SeedStat,
    /// multi minus single, per seed and averaged.
    pub delta: SeedStat,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentTables {
    pub train_size: usize,
    pub test_size: usize,
    pub seeds: Vec<u64>,
    pub grid: Vec<GridRow>,
    pub size_curve: Vec<SizePoint>,
    pub heads: Vec<HeadComparison>,
    pub warnings: Vec<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
struct RunKey {
    mode_qe: bool,
    single: bool,
    size: usize,
    seed_index: usize,
}

fn mode_of(key: &RunKey) -> FeatureMode {
    if key.mode_qe {
        FeatureMode::Qe
    } else {
        FeatureMode::Mte
    }
}

fn head_of(key: &RunKey) -> Head {
    if key.single {
        Head::SingleScore
    } else {
        Head::MultiScore
    }
}

/// Trains and evaluates one configuration on the first `size` training rows.
fn run_one(
    key: RunKey,
    seed: u64,
    split: &Split<ExperimentSample>,
    base: &RegressorConfig,
    variants: &[TauVariant],
) -> Result<Vec<EvalReport>, ExperimentError> {
    let mode = mode_of(&key);
    let head = head_of(&key);
    let cfg = RegressorConfig { mode, head, seed, ..base.clone() };
    let context = format!("{} {} size={} seed={}", mode.label(), head.label(), key.size, seed);
    let train = &split.train[..key.size];
    let rows: Vec<Vec<f64>> = train.iter().map(|s| s.features(mode).to_vec()).collect();
    let targets: Vec<Vec<f64>> = train.iter().map(|s| head.targets(s.gold)).collect();
    let model = train_on_features(&rows, &targets, &cfg).map_err(|source| ExperimentError::Train { context: context.clone(), source })?;
    let preds: Vec<Vec<f64>> = split.test.iter().map(|s| model.predict_features(s.features(mode))).collect();
    let gold: Vec<[f64; 3]> = split.test.iter().map(|s| s.gold).collect();
    variants
        .iter()
        .map(|&v| {
            evaluate_predictions(mode, head, preds.clone(), &gold, v)
                .map_err(|source| ExperimentError::Eval { context: context.clone(), source })
        })
        .collect()
}

/// Keeps the sizes that fit `available`, warning about the rest.
pub fn clip_sizes(requested: &[usize], available: usize, warnings: &mut Vec<String>) -> Result<Vec<usize>, ExperimentError> {
    let mut kept: Vec<usize> = requested.iter().copied().filter(|&s| s > 0 && s <= available).collect();
    kept.sort_unstable();
    kept.dedup();
    let dropped: Vec<String> = requested.iter().filter(|&&s| s > available).map(|s| s.to_string()).collect();
    if !dropped.is_empty() {
        let msg = format!("training sizes {} exceed the {available}-unit training split and were skipped", dropped.join(", "));
        warn!("{msg}");
        warnings.push(msg);
    }
    if kept.is_empty() {
        return Err(ExperimentError::InsufficientData { requested: requested.iter().copied().min().unwrap_or(0), available });
    }
    Ok(kept)
}

pub fn run_experiment_suite(split: &Split<ExperimentSample>, cfg: &SuiteConfig) -> Result<ExperimentTables, ExperimentError> {
    if split.train.is_empty() {
        return Err(ExperimentError::EmptySplit("train"));
    }
    if split.test.is_empty() {
        return Err(ExperimentError::EmptySplit("test"));
    }
    if cfg.seeds.is_empty() {
        return Err(ExperimentError::NoSeeds);
    }
    let full = split.train.len();
    let mut warnings = Vec::new();
    let sizes = clip_sizes(&cfg.sizes, full, &mut warnings)?;

    let mut keys = Vec::new();
    for &mode in &cfg.modes {
        let mode_qe = mode == FeatureMode::Qe;
        for seed_index in 0..cfg.seeds.len() {
            for &size in sizes.iter().chain(std::iter::once(&full)) {
                keys.push(RunKey { mode_qe, single: false, size, seed_index });
            }
            keys.push(RunKey { mode_qe, single: true, size: full, seed_index });
        }
    }
    keys.sort();
    keys.dedup();

    let results: BTreeMap<RunKey, Vec<EvalReport>> = keys
        .par_iter()
        .map(|&k| run_one(k, cfg.seeds[k.seed_index], split, &cfg.base, &cfg.variants).map(|r| (k, r)))
        .collect::<Result<_, _>>()?;

    let seeds = cfg.seeds.len();
    let collect = |mode: FeatureMode, single: bool, size: usize, vi: usize, f: &dyn Fn(&EvalReport) -> f64| {
        SeedStat::of(
            (0..seeds).map(|seed_index| f(&results[&RunKey { mode_qe: mode == FeatureMode::Qe, single, size, seed_index }][vi])).collect(),
        )
    };
    let dim = |k: usize| move |r: &EvalReport| r.dimension_taus().expect("multi-score report")[k];

    let mut grid = Vec::new();
    let mut size_curve = Vec::new();
    let mut heads = Vec::new();
    for &mode in &cfg.modes {
        for (vi, &variant) in cfg.variants.iter().enumerate() {
            grid.push(GridRow {
                mode,
                variant,
                accuracy: collect(mode, false, full, vi, &dim(0)),
                fluency: collect(mode, false, full, vi, &dim(1)),
                style: collect(mode, false, full, vi, &dim(2)),
                overall: collect(mode, false, full, vi, &|r| r.overall),
                average: collect(mode, false, full, vi, &|r| r.mean_dimension_tau().expect("multi-score report")),
            });
            for &size in &sizes {
                size_curve.push(SizePoint {
                    mode,
                    variant,
                    size,
                    accuracy: collect(mode, false, size, vi, &dim(0)),
                    fluency: collect(mode, false, size, vi, &dim(1)),
                    style: collect(mode, false, size, vi, &dim(2)),
                    overall: collect(mode, false, size, vi, &|r| r.overall),
                    mean_tau: collect(mode, false, size, vi, &|r| r.mean_dimension_tau().expect("multi-score report")),
                });
            }
            let single = collect(mode, true, full, vi, &|r| r.overall);
            let multi = collect(mode, false, full, vi, &|r| r.overall);
            let delta = SeedStat::of(multi.per_seed.iter().zip(&single.per_seed).map(|(m, s)| m - s).collect());
            heads.push(HeadComparison { mode, variant, single, multi, delta });
        }
    }

    Ok(ExperimentTables { train_size: full, test_size: split.test.len(), seeds: cfg.seeds.clone(), grid, size_curve, heads, warnings })
}

fn signed(v: f64) -> String {
    if v >= 0.0 {
        format!("+{v:.2}")
    } else {
        format!("{v:.2}")
    }
}

impl ExperimentTables {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("tables serialize")
    }

    pub fn to_text(&self) -> String {
        let mut out = format!(
            "train={} test={} seeds={}\n",
            self.train_size,
            self.test_size,
            self.seeds.iter().map(u64::to_string).collect::<Vec<_>>().join(",")
        );
        for w in &self.warnings {
            out.push_str(&format!("warning: {w}\n"));
        }
        out.push_str("\nMulti-score models (Kendall tau vs gold)\n");
        out.push_str(&format!(
            "{:<6} {:<6} {:>9} {:>9} {:>9} {:>9} {:>9}\n",
            "model", "tau", "accuracy", "fluency", "style", "average", "overall"
        ));
        for r in &self.grid {
            out.push_str(&format!(
                "{:<6} {:<6} {:>9.2} {:>9.2} {:>9.2} {:>9.2} {:>9.2}\n",
                r.mode.label(),
                r.variant.label(),
                r.accuracy.mean,
                r.fluency.mean,
                r.style.mean,
                r.average.mean,
                r.overall.mean
            ));
        }
        out.push_str("\nTraining-size curve (multi-score)\n");
        out.push_str(&format!(
            "{:<6} {:<6} {:>6} {:>9} {:>9} {:>9} {:>9} {:>9}\n",
            "model", "tau", "size", "accuracy", "fluency", "style", "mean", "overall"
        ));
        for p in &self.size_curve {
            out.push_str(&format!(
                "{:<6} {:<6} {:>6} {:>9.2} {:>9.2} {:>9.2} {:>9.2} {:>9.2}\n",
                p.mode.label(),
                p.variant.label(),
                p.size,
                p.accuracy.mean,
                p.fluency.mean,
                p.style.mean,
                p.mean_tau.mean,
                p.overall.mean
            ));
        }
        out.push_str("\nSingle vs multi score (overall tau)\n");
        out.push_str(&format!("{:<6} {:<6} {:>8} {:>8} {:>8}\n", "model", "tau", "single", "multi", "delta"));
        for h in &self.heads {
            out.push_str(&format!(
                "{:<6} {:<6} {:>8.2} {:>8.2} {:>8}\n",
                h.mode.label(),
                h.variant.label(),
                h.single.mean,
                h.multi.mean,
                signed(h.delta.mean)
            ));
        }
        out
    }

    /// Size curve as CSV, one row per (mode, variant, size, seed).
    pub fn size_curve_csv(&self) -> String {
        let mut out = String::from("mode,variant,size,seed,accuracy,fluency,style,mean_tau,overall\n");
        for p in &self.size_curve {
            for (i, seed) in self.seeds.iter().enumerate() {
                out.push_str(&format!(
                    "{},{},{},{},{:.6},{:.6},{:.6},{:.6},{:.6}\n",
                    p.mode.label(),
                    p.variant.label(),
                    p.size,
                    seed,
                    p.accuracy.per_seed[i],
                    p.fluency.per_seed[i],
                    p.style.per_seed[i],
                    p.mean_tau.per_seed[i],
                    p.overall.per_seed[i]
                ));
            }
        }
        out
    }
}
