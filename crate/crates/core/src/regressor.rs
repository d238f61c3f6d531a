//! Linear multi-output quality regressor over sentence features.
//!
//! A single affine layer maps standardized features to either three
//! dimension scores (multi-score head) or one total score (single-score
//! head). Training is mini-batch gradient descent on
//!
//! ```text
//! L(W, b) = 1/B * sum_i sum_k (x_i . w_k + b_k - y_ik)^2 + l2 * ||W||^2
//! ```
//!
//! The loss sums over outputs, so each output column is fit independently
//! of the others given the same batches.

use std::fmt;

use log::warn;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::features::{extract_features, feature_names, FeatureError, FeatureMode, BIAS_FEATURE};
use crate::model::{MqmScore, TranslationUnit};
use crate::rank_stats::{kendall_tau, RankError, TauVariant};

pub const MODEL_FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Head {
    /// accuracy, fluency, style
    MultiScore,
    /// total only
    SingleScore,
}

impl Head {
    pub fn outputs(self) -> usize {
        match self {
            Head::MultiScore => 3,
            Head::SingleScore => 1,
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            Head::MultiScore => "multi",
            Head::SingleScore => "single",
        }
    }

    /// Regression targets for gold dimension scores.
    pub fn targets(self, gold: [f64; 3]) -> Vec<f64> {
        match self {
            Head::MultiScore => gold.to_vec(),
            Head::SingleScore => vec![gold.iter().sum()],
        }
    }
}

impl std::str::FromStr for Head {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "multi" | "multi_score" | "multiscore" => Ok(Head::MultiScore),
            "single" | "single_score" | "singlescore" => Ok(Head::SingleScore),
            _ => Err(format!("unknown head `{s}` (expected multi or single)")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegressorConfig {
    pub mode: FeatureMode,
    pub head: Head,
    pub learning_rate: f64,
    pub epochs: usize,
    pub batch_size: usize,
    pub l2_weight: f64,
    pub seed: u64,
    pub standardize_features: bool,
    pub standardize_targets: bool,
}

impl Default for RegressorConfig {
    fn default() -> Self {
        Self {
            mode: FeatureMode::Mte,
            head: Head::MultiScore,
            learning_rate: 1e-2,
            epochs: 100,
            batch_size: 8,
            l2_weight: 1e-4,
            seed: 0,
            standardize_features: true,
            standardize_targets: false,
        }
    }
}

impl RegressorConfig {
    pub fn validate(&self) -> Result<(), TrainError> {
        if !(self.learning_rate > 0.0) || !self.learning_rate.is_finite() {
            return Err(TrainError::InvalidConfig("learning_rate must be positive"));
        }
        if self.epochs == 0 {
            return Err(TrainError::InvalidConfig("epochs must be positive"));
        }
        if self.batch_size == 0 {
            return Err(TrainError::InvalidConfig("batch_size must be positive"));
        }
        if !(self.l2_weight >= 0.0) {
            return Err(TrainError::InvalidConfig("l2_weight must be non-negative"));
        }
        Ok(())
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum TrainError {
    #[error("training set is empty")]
    EmptyDataset,
    #[error("invalid regressor configuration: {0}")]
    InvalidConfig(&'static str),
    #[error(transparent)]
    Features(#[from] FeatureError),
    #[error("target row {row} has {got} values, head expects {expected}")]
    TargetArity { row: usize, got: usize, expected: usize },
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ModelError {
    #[error(transparent)]
    Features(#[from] FeatureError),
    #[error("model expects {expected} mode features, unit was extracted for {got}")]
    ModeMismatch { expected: &'static str, got: &'static str },
    #[error("unsupported model format version {0}")]
    UnsupportedVersion(u32),
    #[error("malformed model: {0}")]
    Malformed(String),
}

/// Mean and standard deviation per column, fit on the training split.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Standardizer {
    pub means: Vec<f64>,
    pub stds: Vec<f64>,
}

impl Standardizer {
    pub fn fit(rows: &[Vec<f64>]) -> Self {
        let d = rows.first().map_or(0, Vec::len);
        let n = rows.len() as f64;
        let mut means = vec![0.0; d];
        for r in rows {
            for (m, v) in means.iter_mut().zip(r) {
                *m += v;
            }
        }
        means.iter_mut().for_each(|m| *m /= n);
        let mut vars = vec![0.0; d];
        for r in rows {
            for j in 0..d {
                vars[j] += (r[j] - means[j]).powi(2);
            }
        }
        let stds = vars.into_iter().map(|v| (v / n).sqrt()).collect();
        Self { means, stds }
    }

    pub fn identity(d: usize) -> Self {
        Self { means: vec![0.0; d], stds: vec![1.0; d] }
    }

    pub fn apply(&self, row: &[f64]) -> Vec<f64> {
        row.iter().zip(&self.means).zip(&self.stds).map(|((v, m), s)| (v - m) / s).collect()
    }

    pub fn invert(&self, row: &[f64]) -> Vec<f64> {
        row.iter().zip(&self.means).zip(&self.stds).map(|((v, m), s)| v * s + m).collect()
    }
}

/// Below this a feature column counts as constant.
const MIN_STD: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub struct LinearParams {
    /// `outputs x features`
    pub weights: Vec<Vec<f64>>,
    pub bias: Vec<f64>,
}

impl LinearParams {
    pub fn zeros(outputs: usize, features: usize) -> Self {
        Self { weights: vec![vec![0.0; features]; outputs], bias: vec![0.0; outputs] }
    }

    pub fn predict(&self, x: &[f64]) -> Vec<f64> {
        self.weights.iter().zip(&self.bias).map(|(w, b)| w.iter().zip(x).map(|(a, b)| a * b).sum::<f64>() + b).collect()
    }
}

/// Objective value and its gradient on one batch.
#[derive(Debug, Clone, PartialEq)]
pub struct LossGradient {
    pub loss: f64,
    pub weights: Vec<Vec<f64>>,
    pub bias: Vec<f64>,
}

pub fn objective(params: &LinearParams, x: &[&[f64]], y: &[&[f64]], l2: f64) -> f64 {
    let b = x.len() as f64;
    let data: f64 = x.iter().zip(y).map(|(xi, yi)| params.predict(xi).iter().zip(*yi).map(|(p, t)| (p - t).powi(2)).sum::<f64>()).sum();
    let penalty: f64 = params.weights.iter().flatten().map(|w| w * w).sum();
    data / b + l2 * penalty
}

/// Analytic gradient of [`objective`].
pub fn loss_and_gradient(params: &LinearParams, x: &[&[f64]], y: &[&[f64]], l2: f64) -> LossGradient {
    let outputs = params.bias.len();
    let features = params.weights.first().map_or(0, Vec::len);
    let b = x.len() as f64;
    let mut grad_w = vec![vec![0.0; features]; outputs];
    let mut grad_b = vec![0.0; outputs];
    let mut data = 0.0;
    for (xi, yi) in x.iter().zip(y) {
        let pred = params.predict(xi);
        for k in 0..outputs {
            let r = pred[k] - yi[k];
            data += r * r;
            let scale = 2.0 * r / b;
            grad_b[k] += scale;
            for (g, xv) in grad_w[k].iter_mut().zip(xi.iter()) {
                *g += scale * xv;
            }
        }
    }
    let mut penalty = 0.0;
    for (gk, wk) in grad_w.iter_mut().zip(&params.weights) {
        for (g, w) in gk.iter_mut().zip(wk) {
            *g += 2.0 * l2 * w;
            penalty += w * w;
        }
    }
    LossGradient { loss: data / b + l2 * penalty, weights: grad_w, bias: grad_b }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FitResult {
    pub params: LinearParams,
    /// Full-data objective after each epoch.
    pub loss_trace: Vec<f64>,
}

/// Mini-batch gradient descent on a prepared design matrix.
///
/// Weights start at zero and the bias at the target mean. Batches come from
/// a per-epoch shuffle driven by `seed`, so runs are bit-for-bit repeatable.
pub fn fit_linear(x: &[Vec<f64>], y: &[Vec<f64>], learning_rate: f64, epochs: usize, batch_size: usize, l2: f64, seed: u64) -> FitResult {
    let n = x.len();
    let outputs = y[0].len();
    let features = x[0].len();
    let mut params = LinearParams::zeros(outputs, features);
    for k in 0..outputs {
        params.bias[k] = y.iter().map(|r| r[k]).sum::<f64>() / n as f64;
    }

    let all_x: Vec<&[f64]> = x.iter().map(Vec::as_slice).collect();
    let all_y: Vec<&[f64]> = y.iter().map(Vec::as_slice).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut order: Vec<usize> = (0..n).collect();
    let mut loss_trace = Vec::with_capacity(epochs);
    for _ in 0..epochs {
        order.shuffle(&mut rng);
        for batch in order.chunks(batch_size) {
            let bx: Vec<&[f64]> = batch.iter().map(|&i| all_x[i]).collect();
            let by: Vec<&[f64]> = batch.iter().map(|&i| all_y[i]).collect();
            let g = loss_and_gradient(&params, &bx, &by, l2);
            for (wk, gk) in params.weights.iter_mut().zip(&g.weights) {
                for (w, gv) in wk.iter_mut().zip(gk) {
                    *w -= learning_rate * gv;
                }
            }
            for (b, gv) in params.bias.iter_mut().zip(&g.bias) {
                *b -= learning_rate * gv;
            }
        }
        loss_trace.push(objective(&params, &all_x, &all_y, l2));
    }
    FitResult { params, loss_trace }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainedModel {
    pub format_version: u32,
    pub config: RegressorConfig,
    /// All features the mode extracts, bias last.
    pub feature_names: Vec<String>,
    /// Features the weights apply to (constant columns are dropped).
    pub active_features: Vec<String>,
    pub feature_scaler: Standardizer,
    pub target_scaler: Option<Standardizer>,
    /// `outputs x active_features`
    pub weights: Vec<Vec<f64>>,
    pub bias: Vec<f64>,
    pub loss_trace: Vec<f64>,
    pub dropped_features: Vec<String>,
}

/// Unit with its gold MQM score.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LabeledUnit {
    pub unit: TranslationUnit,
    pub score: MqmScore,
}

impl LabeledUnit {
    pub fn new(unit: TranslationUnit, score: MqmScore) -> Self {
        Self { unit, score }
    }

    pub fn gold(&self) -> [f64; 3] {
        gold_vector(&self.score)
    }
}

pub fn gold_vector(score: &MqmScore) -> [f64; 3] {
    score.dimensions().map(|v| v as f64)
}

fn active_indices(names: &[&str], active: &[String]) -> Vec<usize> {
    active.iter().map(|a| names.iter().position(|n| n == a).expect("active feature exists")).collect()
}

/// Trains on precomputed feature rows (bias component included, last).
pub fn train_on_features(rows: &[Vec<f64>], targets: &[Vec<f64>], cfg: &RegressorConfig) -> Result<TrainedModel, TrainError> {
    cfg.validate()?;
    if rows.is_empty() {
        return Err(TrainError::EmptyDataset);
    }
    let expected = cfg.head.outputs();
    if let Some((row, t)) = targets.iter().enumerate().find(|(_, t)| t.len() != expected) {
        return Err(TrainError::TargetArity { row, got: t.len(), expected });
    }
    let names = feature_names(cfg.mode);
    let raw: Vec<Vec<f64>> = rows.iter().map(|r| r[..r.len() - 1].to_vec()).collect();

    let (active, dropped): (Vec<usize>, Vec<usize>) = if cfg.standardize_features {
        let full = Standardizer::fit(&raw);
        (0..names.len() - 1).partition(|&j| full.stds[j] > MIN_STD)
    } else {
        ((0..names.len() - 1).collect(), Vec::new())
    };
    let dropped_features: Vec<String> = dropped.iter().map(|&j| names[j].to_string()).collect();
    if !dropped_features.is_empty() {
        warn!("dropping constant features: {}", dropped_features.join(", "));
    }

    let selected: Vec<Vec<f64>> = raw.iter().map(|r| active.iter().map(|&j| r[j]).collect()).collect();
    let feature_scaler = if cfg.standardize_features { Standardizer::fit(&selected) } else { Standardizer::identity(active.len()) };
    let x: Vec<Vec<f64>> = selected.iter().map(|r| feature_scaler.apply(r)).collect();

    let target_scaler = cfg.standardize_targets.then(|| {
        let mut s = Standardizer::fit(targets);
        s.stds.iter_mut().filter(|v| **v <= MIN_STD).for_each(|v| *v = 1.0);
        s
    });
    let y: Vec<Vec<f64>> = match &target_scaler {
        Some(s) => targets.iter().map(|t| s.apply(t)).collect(),
        None => targets.to_vec(),
    };

    let fit = fit_linear(&x, &y, cfg.learning_rate, cfg.epochs, cfg.batch_size, cfg.l2_weight, cfg.seed);
    Ok(TrainedModel {
        format_version: MODEL_FORMAT_VERSION,
        config: cfg.clone(),
        feature_names: names.iter().map(|s| s.to_string()).collect(),
        active_features: active.iter().map(|&j| names[j].to_string()).collect(),
        feature_scaler,
        target_scaler,
        weights: fit.params.weights,
        bias: fit.params.bias,
        loss_trace: fit.loss_trace,
        dropped_features,
    })
}

pub fn train(dataset: &[LabeledUnit], cfg: &RegressorConfig) -> Result<TrainedModel, TrainError> {
    if dataset.is_empty() {
        return Err(TrainError::EmptyDataset);
    }
    let rows = dataset.iter().map(|l| extract_features(&l.unit, cfg.mode).map(|f| f.values)).collect::<Result<Vec<_>, _>>()?;
    let targets: Vec<Vec<f64>> = dataset.iter().map(|l| cfg.head.targets(l.gold())).collect();
    train_on_features(&rows, &targets, cfg)
}

impl TrainedModel {
    pub fn outputs(&self) -> usize {
        self.bias.len()
    }

    /// Prediction from a full feature row (bias component last). No clamping:
    /// negative scores can come out.
    pub fn predict_features(&self, row: &[f64]) -> Vec<f64> {
        let names: Vec<&str> = self.feature_names.iter().map(String::as_str).collect();
        let selected: Vec<f64> = active_indices(&names, &self.active_features).iter().map(|&j| row[j]).collect();
        let x = self.feature_scaler.apply(&selected);
        let params = LinearParams { weights: self.weights.clone(), bias: self.bias.clone() };
        let out = params.predict(&x);
        match &self.target_scaler {
            Some(s) => s.invert(&out),
            None => out,
        }
    }

    pub fn predict(&self, unit: &TranslationUnit) -> Result<Vec<f64>, ModelError> {
        let f = extract_features(unit, self.config.mode)?;
        if f.mode != self.config.mode {
            return Err(ModelError::ModeMismatch { expected: self.config.mode.label(), got: f.mode.label() });
        }
        Ok(self.predict_features(&f.values))
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("model serializes")
    }

    pub fn from_json(text: &str) -> Result<Self, ModelError> {
        let value: serde_json::Value = serde_json::from_str(text).map_err(|e| ModelError::Malformed(e.to_string()))?;
        let version = value.get("format_version").and_then(|v| v.as_u64()).unwrap_or(0) as u32;
        if version != MODEL_FORMAT_VERSION {
            return Err(ModelError::UnsupportedVersion(version));
        }
        let model: TrainedModel = serde_json::from_value(value).map_err(|e| ModelError::Malformed(e.to_string()))?;
        model.check_shapes()?;
        Ok(model)
    }

    fn check_shapes(&self) -> Result<(), ModelError> {
        let bad = |m: String| Err(ModelError::Malformed(m));
        let expected: Vec<String> = feature_names(self.config.mode).iter().map(|s| s.to_string()).collect();
        if self.feature_names != expected {
            return bad("feature names do not match the model mode".into());
        }
        if self.feature_names.last().map(String::as_str) != Some(BIAS_FEATURE) {
            return bad("bias feature must come last".into());
        }
        if self.bias.len() != self.config.head.outputs() || self.weights.len() != self.bias.len() {
            return bad(format!("head {} needs {} outputs", self.config.head.label(), self.config.head.outputs()));
        }
        let d = self.active_features.len();
        if self.weights.iter().any(|w| w.len() != d) || self.feature_scaler.means.len() != d || self.feature_scaler.stds.len() != d {
            return bad("weight/scaler width differs from active feature count".into());
        }
        if self.active_features.iter().any(|a| !self.feature_names.contains(a)) {
            return bad("unknown active feature".into());
        }
        Ok(())
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum EvalError {
    #[error("need at least 2 test units, got {0}")]
    TooFewUnits(usize),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error("{what}: {source}")]
    Rank { what: &'static str, source: RankError },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub mode: FeatureMode,
    pub head: Head,
    pub variant: TauVariant,
    pub n: usize,
    /// Per-dimension taus; only the multi-score head has them.
    pub accuracy: Option<f64>,
    pub fluency: Option<f64>,
    pub style: Option<f64>,
    /// Tau of the predicted total (sum of the three outputs for multi-score).
    pub overall: f64,
    /// Per unit: raw model outputs.
    pub predictions: Vec<Vec<f64>>,
}

impl EvalReport {
    pub fn dimension_taus(&self) -> Option<[f64; 3]> {
        Some([self.accuracy?, self.fluency?, self.style?])
    }

    /// Mean of the three dimension taus (multi-score only).
    pub fn mean_dimension_tau(&self) -> Option<f64> {
        self.dimension_taus().map(|t| t.iter().sum::<f64>() / 3.0)
    }
}

impl fmt::Display for EvalReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let cell = |v: Option<f64>| v.map_or("-".to_string(), |v| format!("{v:.3}"));
        write!(
            f,
            "{} {} ({}, n={}): accuracy {} fluency {} style {} overall {:.3}",
            self.mode.label(),
            self.head.label(),
            self.variant.label(),
            self.n,
            cell(self.accuracy),
            cell(self.fluency),
            cell(self.style),
            self.overall
        )
    }
}

/// Correlates predictions with gold dimension scores.
pub fn evaluate_predictions(
    mode: FeatureMode,
    head: Head,
    predictions: Vec<Vec<f64>>,
    gold: &[[f64; 3]],
    variant: TauVariant,
) -> Result<EvalReport, EvalError> {
    let n = gold.len();
    if n < 2 {
        return Err(EvalError::TooFewUnits(n));
    }
    let tau = |what: &'static str, pred: Vec<f64>, gold: Vec<f64>| {
        kendall_tau(&pred, &gold, variant).map(|r| r.tau).map_err(|source| EvalError::Rank { what, source })
    };
    let gold_total: Vec<f64> = gold.iter().map(|g| g.iter().sum()).collect();
    let report = match head {
        Head::MultiScore => {
            let column = |k: usize| predictions.iter().map(|p| p[k]).collect::<Vec<f64>>();
            let gold_dim = |k: usize| gold.iter().map(|g| g[k]).collect::<Vec<f64>>();
            let summed: Vec<f64> = predictions.iter().map(|p| p.iter().sum()).collect();
            EvalReport {
                mode,
                head,
                variant,
                n,
                accuracy: Some(tau("accuracy", column(0), gold_dim(0))?),
                fluency: Some(tau("fluency", column(1), gold_dim(1))?),
                style: Some(tau("style", column(2), gold_dim(2))?),
                overall: tau("overall", summed, gold_total)?,
                predictions,
            }
        }
        Head::SingleScore => {
            let pred: Vec<f64> = predictions.iter().map(|p| p[0]).collect();
            EvalReport {
                mode,
                head,
                variant,
                n,
                accuracy: None,
                fluency: None,
                style: None,
                overall: tau("overall", pred, gold_total)?,
                predictions,
            }
        }
    };
    Ok(report)
}

pub fn evaluate(model: &TrainedModel, testset: &[LabeledUnit], variant: TauVariant) -> Result<EvalReport, EvalError> {
    if testset.len() < 2 {
        return Err(EvalError::TooFewUnits(testset.len()));
    }
    let predictions = testset.iter().map(|l| model.predict(&l.unit)).collect::<Result<Vec<_>, _>>()?;
    let gold: Vec<[f64; 3]> = testset.iter().map(LabeledUnit::gold).collect();
    evaluate_predictions(model.config.mode, model.config.head, predictions, &gold, variant)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg(head: Head) -> RegressorConfig {
        RegressorConfig { mode: FeatureMode::Qe, head, ..Default::default() }
    }

    fn row(values: &[f64]) -> Vec<f64> {
        let mut r = values.to_vec();
        r.push(1.0);
        r
    }

    #[test]
    fn zero_weights_predict_bias() {
        let names = feature_names(FeatureMode::Qe);
        let model = TrainedModel {
            format_version: MODEL_FORMAT_VERSION,
            config: cfg(Head::MultiScore),
            feature_names: names.iter().map(|s| s.to_string()).collect(),
            active_features: names[..names.len() - 1].iter().map(|s| s.to_string()).collect(),
            feature_scaler: Standardizer::identity(names.len() - 1),
            target_scaler: None,
            weights: vec![vec![0.0; names.len() - 1]; 3],
            bias: vec![1.5, -2.0, 7.0],
            loss_trace: vec![],
            dropped_features: vec![],
        };
        let x = row(&[0.3, 0.1, 1.0, -2.0, 3.1, 0.0, 0.8]);
        assert_eq!(model.predict_features(&x), vec![1.5, -2.0, 7.0]);
        let back = TrainedModel::from_json(&model.to_json()).unwrap();
        assert_eq!(back, model);
    }

    #[test]
    fn single_point_is_memorized() {
        let rows = vec![row(&[0.3, 0.1, 1.0, -2.0, 3.1, 0.0, 0.8])];
        let model = train_on_features(&rows, &[vec![11.0, 6.0, 5.0]], &cfg(Head::MultiScore)).unwrap();
        let p = model.predict_features(&rows[0]);
        for (a, b) in p.iter().zip([11.0, 6.0, 5.0]) {
            assert!((a - b).abs() < 1e-3);
        }
        assert_eq!(model.dropped_features.len(), 7);
    }

    #[test]
    fn config_and_data_errors() {
        let mut c = cfg(Head::SingleScore);
        c.batch_size = 0;
        assert!(matches!(train_on_features(&[row(&[0.0; 7])], &[vec![1.0]], &c), Err(TrainError::InvalidConfig(_))));
        assert_eq!(train_on_features(&[], &[], &cfg(Head::SingleScore)), Err(TrainError::EmptyDataset));
        assert!(matches!(
            train_on_features(&[row(&[0.0; 7])], &[vec![1.0, 2.0]], &cfg(Head::SingleScore)),
            Err(TrainError::TargetArity { .. })
        ));
    }

    #[test]
    fn eval_identity_and_negation() {
        let gold: Vec<[f64; 3]> = (0..6u32).map(|i| gold_vector(&MqmScore::from_dimensions(i, (i * 2) % 5, i % 3))).collect();
        let exact: Vec<Vec<f64>> = gold.iter().map(|g| g.to_vec()).collect();
        let r = evaluate_predictions(FeatureMode::Mte, Head::MultiScore, exact.clone(), &gold, TauVariant::Gamma).unwrap();
        assert_eq!(r.dimension_taus(), Some([1.0, 1.0, 1.0]));
        assert_eq!(r.overall, 1.0);
        let neg: Vec<Vec<f64>> = exact.iter().map(|p| p.iter().map(|v| -v).collect()).collect();
        let r = evaluate_predictions(FeatureMode::Mte, Head::MultiScore, neg, &gold, TauVariant::Gamma).unwrap();
        assert_eq!(r.dimension_taus(), Some([-1.0, -1.0, -1.0]));
        assert_eq!(r.overall, -1.0);
        assert_eq!(
            evaluate_predictions(FeatureMode::Mte, Head::SingleScore, vec![vec![1.0]], &gold[..1], TauVariant::Gamma),
            Err(EvalError::TooFewUnits(1))
        );
    }

    #[test]
    fn model_json_rejects_bad_version() {
        assert!(matches!(TrainedModel::from_json(r#"{"format_version": 99}"#), Err(ModelError::UnsupportedVersion(99))));
    }
}
