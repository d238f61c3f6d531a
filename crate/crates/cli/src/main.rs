//! `mqm`: command-line front end for the evaluation toolkit.

mod io;

use std::fs;
use std::io::Write as _;
use std::net::{IpAddr, SocketAddr};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use mqm_core::corpus::{
    corpus_stats, corpus_stats_with_pool, load_parallel, records_to_jsonl, sample_and_split, write_records, DatasetRecord, InputFormat,
    SplitSizes,
};
use mqm_core::experiments::{run_experiment_suite, ExperimentSample, SuiteConfig, DEFAULT_SIZES};
use mqm_core::features::FeatureMode;
use mqm_core::metrics::{score_units, BleuConfig, ChrfConfig, Tokenizer};
use mqm_core::model::{validate_annotation, Corpus, Violation};
use mqm_core::parser::{parse_document, serialize_document};
use mqm_core::provider::{build_hypotheses, BuildOptions, PromptTemplate, ProviderSpec};
use mqm_core::rank_stats::{agreement_report, correlation_matrix, NamedColumn, TauVariant};
use mqm_core::regressor::{evaluate, train, Head, RegressorConfig, TrainedModel};
use mqm_core::scoring::score_dataset;
use mqm_core::synth::{linear_fixture, LinearFixtureConfig};
use serde::Serialize;

use crate::io::{load_annotated, load_dataset, load_labeled, load_table, parse_list, read_text, score_rows, unique_ids};

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Text,
    Json,
}

#[derive(Parser, Debug)]
#[command(name = "mqm", version, about = "MQM annotation scoring, meta-evaluation and quality regression")]
struct Cli {
    /// Output format for results.
    #[arg(long, global = true, value_enum, default_value_t = Format::Text)]
    format: Format,
    /// Corpus assigned to units that do not name one.
    #[arg(long, global = true, default_value = "global_voices")]
    corpus: Corpus,
    /// More log output (repeat for debug).
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    verbose: u8,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Parse an annotation document and report its structure.
    Parse {
        #[arg(long, short)]
        input: PathBuf,
        /// Print the canonical serialization instead of a summary.
        #[arg(long)]
        canonical: bool,
    },
    /// Check annotations against the taxonomy and the unit text.
    Validate {
        #[arg(long, short)]
        input: PathBuf,
    },
    /// Per-unit MQM scores with dataset aggregates.
    Score {
        #[arg(long, short = 'a', alias = "input")]
        annotations: PathBuf,
        /// Number of most frequent error types to list.
        #[arg(long, default_value_t = 10)]
        top: usize,
    },
    /// Kendall tau matrix over numeric columns of a table.
    Corr {
        #[arg(long, short)]
        input: PathBuf,
        /// Comma-separated column names (default: every numeric column).
        #[arg(long)]
        columns: Option<String>,
        #[arg(long, default_value = "gamma")]
        variant: TauVariant,
        /// Extra columns to negate before correlating.
        #[arg(long)]
        invert: Option<String>,
        /// Do not negate BLEU/chrF columns automatically.
        #[arg(long)]
        no_auto_invert: bool,
    },
    /// Primary annotator against the mean of cross-validators.
    Agree {
        #[arg(long)]
        primary: PathBuf,
        #[arg(long = "validator", required = true)]
        validators: Vec<PathBuf>,
        #[arg(long, default_value = "gamma")]
        variant: TauVariant,
    },
    /// Corpus sizes and average lengths.
    Stats {
        #[arg(long, short)]
        input: PathBuf,
        /// Full pool the input was sampled from, for total counts.
        #[arg(long)]
        pool: Option<PathBuf>,
    },
    /// Sentence BLEU and chrF of each hypothesis against its reference.
    Metrics {
        #[arg(long, short)]
        input: PathBuf,
        /// Write the table (TSV) here as well.
        #[arg(long, short)]
        output: Option<PathBuf>,
        #[arg(long, default_value_t = 4)]
        bleu_order: usize,
        #[arg(long, default_value_t = 0.1)]
        epsilon: f64,
        #[arg(long, default_value = "whitespace")]
        tokenizer: Tokenizer,
        #[arg(long, default_value_t = 6)]
        chrf_order: usize,
        #[arg(long, default_value_t = 2.0)]
        beta: f64,
    },
    /// Balanced, seeded train/validation/test split.
    Split {
        #[arg(long, short)]
        input: PathBuf,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// train,validation,test (default 1000,100,100 scaled to the input).
        #[arg(long)]
        sizes: Option<SplitSizes>,
        #[arg(long)]
        out_dir: PathBuf,
    },
    /// Fit the quality regressor.
    Train {
        #[arg(long)]
        train: PathBuf,
        #[arg(long)]
        model_out: PathBuf,
        #[command(flatten)]
        model: ModelArgs,
    },
    /// Correlate a trained model's predictions with gold scores.
    Eval {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        test: PathBuf,
        #[arg(long, default_value = "gamma")]
        variant: TauVariant,
    },
    /// Feature-set grid, data-size curve and head comparison over seeds.
    Experiments {
        /// Labeled dataset to split.
        #[arg(long, short, required_unless_present = "synthetic")]
        input: Option<PathBuf>,
        /// Use a synthetic linear dataset with this many units per corpus.
        #[arg(long, conflicts_with = "input")]
        synthetic: Option<usize>,
        #[arg(long, default_value_t = 0)]
        split_seed: u64,
        #[arg(long)]
        sizes: Option<SplitSizes>,
        #[arg(long, default_value = "0,1,2")]
        seeds: String,
        /// Training-size curve points.
        #[arg(long)]
        train_sizes: Option<String>,
        #[arg(long, default_value = "mte,qe")]
        modes: String,
        #[arg(long, default_value = "gamma,tau-b")]
        variants: String,
        /// Also write tables.json, tables.txt and size_curve.csv here.
        #[arg(long)]
        out_dir: Option<PathBuf>,
        #[command(flatten)]
        model: ModelArgs,
    },
    /// Fill missing hypotheses by paraphrasing and translating sources.
    BuildDataset {
        #[arg(long, short)]
        input: PathBuf,
        #[arg(long, short)]
        output: PathBuf,
        #[arg(long, value_enum, default_value_t = ProviderKind::Mock)]
        provider: ProviderKind,
        #[arg(long, default_value_t = 30)]
        timeout_secs: u64,
        #[arg(long, default_value_t = 2)]
        max_retries: u32,
        #[arg(long, default_value_t = 4)]
        parallelism: usize,
        /// File holding a prompt template with the sentence placeholder.
        #[arg(long)]
        prompt_template: Option<PathBuf>,
        #[arg(long)]
        audit_log: Option<PathBuf>,
    },
    /// Run the annotation HTTP service.
    Serve {
        /// Units to annotate (JSONL records or TSV).
        #[arg(long)]
        data: PathBuf,
        #[arg(long)]
        state_dir: PathBuf,
        #[arg(long, default_value = "127.0.0.1")]
        bind: IpAddr,
        #[arg(long, default_value_t = 8080)]
        port: u16,
        #[arg(long, default_value_t = 100)]
        snapshot_every: u64,
        /// Allowed browser origin (default: any).
        #[arg(long)]
        cors_origin: Option<String>,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum ProviderKind {
    Mock,
    Http,
}

#[derive(Args, Debug, Clone)]
struct ModelArgs {
    #[arg(long, default_value = "mte")]
    mode: FeatureMode,
    #[arg(long, default_value = "multi")]
    head: Head,
    #[arg(long)]
    learning_rate: Option<f64>,
    #[arg(long)]
    epochs: Option<usize>,
    #[arg(long)]
    batch_size: Option<usize>,
    #[arg(long)]
    l2: Option<f64>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    no_standardize_features: bool,
    #[arg(long)]
    standardize_targets: bool,
}

impl ModelArgs {
    fn config(&self) -> RegressorConfig {
        let d = RegressorConfig::default();
        RegressorConfig {
            mode: self.mode,
            head: self.head,
            learning_rate: self.learning_rate.unwrap_or(d.learning_rate),
            epochs: self.epochs.unwrap_or(d.epochs),
            batch_size: self.batch_size.unwrap_or(d.batch_size),
            l2_weight: self.l2.unwrap_or(d.l2_weight),
            seed: self.seed.unwrap_or(d.seed),
            standardize_features: !self.no_standardize_features,
            standardize_targets: self.standardize_targets,
        }
    }
}

/// Errors that should exit with status 2.
#[derive(Debug, thiserror::Error)]
#[error("{0}")]
struct UsageError(String);

fn usage(msg: impl Into<String>) -> anyhow::Error {
    UsageError(msg.into()).into()
}

struct Out {
    format: Format,
}

impl Out {
    fn emit<T: Serialize>(&self, value: &T, text: impl FnOnce() -> String) -> Result<()> {
        let rendered = match self.format {
            Format::Json => serde_json::to_string_pretty(value)? + "\n",
            Format::Text => text(),
        };
        let mut stdout = std::io::stdout().lock();
        stdout.write_all(rendered.as_bytes())?;
        stdout.flush()?;
        Ok(())
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();
    match run(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            if e.is::<UsageError>() {
                ExitCode::from(2)
            } else {
                ExitCode::from(1)
            }
        }
    }
}

fn run(cli: Cli) -> Result<ExitCode> {
    let out = Out { format: cli.format };
    let corpus = cli.corpus;
    match cli.command {
        Command::Parse { input, canonical } => cmd_parse(&out, &input, canonical),
        Command::Validate { input } => cmd_validate(&out, &input, corpus),
        Command::Score { annotations, top } => cmd_score(&out, &annotations, corpus, top),
        Command::Corr { input, columns, variant, invert, no_auto_invert } => {
            cmd_corr(&out, &input, columns.as_deref(), variant, invert.as_deref(), !no_auto_invert)
        }
        Command::Agree { primary, validators, variant } => {
            let p = score_rows(&primary, corpus)?;
            let v = validators.iter().map(|path| score_rows(path, corpus)).collect::<Result<Vec<_>>>()?;
            let report = agreement_report(&p, &v, variant)?;
            out.emit(&report, || report.to_text())?;
            Ok(ExitCode::SUCCESS)
        }
        Command::Stats { input, pool } => {
            let sample = load_parallel(&input, InputFormat::from_path(&input), corpus).with_context(|| input.display().to_string())?;
            let stats = match pool {
                Some(p) => {
                    let pool = load_parallel(&p, InputFormat::from_path(&p), corpus).with_context(|| p.display().to_string())?;
                    corpus_stats_with_pool(&pool, &sample)
                }
                None => corpus_stats(&sample),
            };
            out.emit(&stats, || stats.to_text())?;
            Ok(ExitCode::SUCCESS)
        }
        Command::Metrics { input, output, bleu_order, epsilon, tokenizer, chrf_order, beta } => {
            let bleu = BleuConfig { max_ngram_order: bleu_order, smoothing_epsilon: epsilon, tokenizer };
            let chrf = ChrfConfig { char_ngram_order: chrf_order, beta };
            cmd_metrics(&out, &input, output.as_deref(), corpus, &bleu, &chrf)
        }
        Command::Split { input, seed, sizes, out_dir } => cmd_split(&out, &input, corpus, seed, sizes, &out_dir),
        Command::Train { train: path, model_out, model } => {
            let data = load_labeled(&path, corpus)?;
            let m = train(&data, &model.config())?;
            write_file(&model_out, m.to_json().as_bytes())?;
            #[derive(Serialize)]
            struct Summary<'a> {
                units: usize,
                model: &'a Path,
                final_loss: Option<f64>,
                dropped_features: &'a [String],
            }
            let s = Summary {
                units: data.len(),
                model: &model_out,
                final_loss: m.loss_trace.last().copied(),
                dropped_features: &m.dropped_features,
            };
            out.emit(&s, || {
                let mut t = format!(
                    "trained {} {} on {} units; final loss {:.6}\nmodel written to {}\n",
                    m.config.mode.label(),
                    m.config.head.label(),
                    data.len(),
                    s.final_loss.unwrap_or(f64::NAN),
                    model_out.display()
                );
                if !m.dropped_features.is_empty() {
                    t.push_str(&format!("dropped constant features: {}\n", m.dropped_features.join(", ")));
                }
                t
            })?;
            Ok(ExitCode::SUCCESS)
        }
        Command::Eval { model, test, variant } => {
            let m = TrainedModel::from_json(&read_text(&model)?).with_context(|| model.display().to_string())?;
            let data = load_labeled(&test, corpus)?;
            let report = evaluate(&m, &data, variant)?;
            #[derive(Serialize)]
            struct WithMean<'a> {
                #[serde(flatten)]
                report: &'a mqm_core::regressor::EvalReport,
                mean_dimension_tau: Option<f64>,
            }
            let json = WithMean { report: &report, mean_dimension_tau: report.mean_dimension_tau() };
            out.emit(&json, || {
                let mut t = format!("{report}\n");
                if let Some(mean) = report.mean_dimension_tau() {
                    t.push_str(&format!("mean of dimension taus {mean:.3}\n"));
                }
                t
            })?;
            Ok(ExitCode::SUCCESS)
        }
        Command::Experiments { input, synthetic, split_seed, sizes, seeds, train_sizes, modes, variants, out_dir, model } => {
            let samples: Vec<ExperimentSample> = match (input, synthetic) {
                (_, Some(per_corpus)) => linear_fixture(&LinearFixtureConfig { per_corpus, seed: split_seed, ..Default::default() }),
                (Some(path), None) => load_labeled(&path, corpus)?
                    .iter()
                    .map(ExperimentSample::from_labeled)
                    .collect::<Result<_, _>>()
                    .with_context(|| path.display().to_string())?,
                (None, None) => return Err(usage("either --input or --synthetic is required")),
            };
            let sizes = sizes.unwrap_or_else(|| SplitSizes::default().scaled_to(samples.len()));
            let split = sample_and_split(&samples, split_seed, sizes)?;
            let cfg = SuiteConfig {
                base: model.config(),
                seeds: parse_list(&seeds).map_err(|e| usage(format!("--seeds: {e}")))?,
                sizes: match train_sizes {
                    Some(s) => parse_list(&s).map_err(|e| usage(format!("--train-sizes: {e}")))?,
                    None => DEFAULT_SIZES.to_vec(),
                },
                modes: parse_list(&modes).map_err(|e| usage(format!("--modes: {e}")))?,
                variants: parse_list(&variants).map_err(|e| usage(format!("--variants: {e}")))?,
            };
            let tables = run_experiment_suite(&split, &cfg)?;
            for w in &tables.warnings {
                eprintln!("warning: {w}");
            }
            if let Some(dir) = out_dir {
                fs::create_dir_all(&dir).with_context(|| dir.display().to_string())?;
                write_file(&dir.join("tables.json"), tables.to_json().as_bytes())?;
                write_file(&dir.join("tables.txt"), tables.to_text().as_bytes())?;
                write_file(&dir.join("size_curve.csv"), tables.size_curve_csv().as_bytes())?;
            }
            out.emit(&tables, || tables.to_text())?;
            Ok(ExitCode::SUCCESS)
        }
        Command::BuildDataset { input, output, provider, timeout_secs, max_retries, parallelism, prompt_template, audit_log } => {
            let units = load_parallel(&input, InputFormat::from_path(&input), corpus).with_context(|| input.display().to_string())?;
            let spec = match provider {
                ProviderKind::Mock => ProviderSpec::Mock,
                ProviderKind::Http => ProviderSpec::Http { timeout_secs },
            };
            let provider = spec.build()?;
            let template = match prompt_template {
                Some(p) => {
                    PromptTemplate::new(read_text(&p)?.trim_end().to_string()).map_err(|e| usage(format!("--prompt-template: {e}")))?
                }
                None => PromptTemplate::default(),
            };
            let opts = BuildOptions { template, max_retries, parallelism, audit_log, ..Default::default() };
            let report = build_hypotheses(&units, provider.as_ref(), &opts)?;
            let records: Vec<DatasetRecord> = report.units.iter().cloned().map(DatasetRecord::from_unit).collect();
            write_records(&output, &records).with_context(|| output.display().to_string())?;
            for f in &report.failures {
                eprintln!("{}: unit `{}` failed at {} after {} attempt(s): {}", input.display(), f.unit_id, f.step, f.attempts, f.message);
            }
            #[derive(Serialize)]
            struct Summary<'a> {
                units: usize,
                generated: usize,
                skipped: usize,
                failures: &'a [mqm_core::provider::UnitFailure],
            }
            let s = Summary { units: report.units.len(), generated: report.generated, skipped: report.skipped, failures: &report.failures };
            out.emit(&s, || {
                format!(
                    "{} units: {} generated, {} already had hypotheses, {} failed\nwritten to {}\n",
                    s.units,
                    s.generated,
                    s.skipped,
                    s.failures.len(),
                    output.display()
                )
            })?;
            Ok(if report.failures.is_empty() { ExitCode::SUCCESS } else { ExitCode::from(1) })
        }
        Command::Serve { data, state_dir, bind, port, snapshot_every, cors_origin } => {
            let records = load_dataset(&data, corpus)?;
            let cfg = mqm_service::ServiceConfig { bind: SocketAddr::new(bind, port), state_dir, snapshot_every, cors_origin };
            let rt = tokio::runtime::Builder::new_multi_thread().enable_all().build()?;
            rt.block_on(mqm_service::serve(records, cfg))?;
            Ok(ExitCode::SUCCESS)
        }
    }
}

fn write_file(path: &Path, bytes: &[u8]) -> Result<()> {
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        fs::create_dir_all(parent).with_context(|| parent.display().to_string())?;
    }
    fs::write(path, bytes).with_context(|| format!("{}: cannot write", path.display()))
}

fn cmd_parse(out: &Out, input: &Path, canonical: bool) -> Result<ExitCode> {
    let text = read_text(input)?;
    let blocks = parse_document(&text).with_context(|| input.display().to_string())?;
    if canonical {
        let doc = serialize_document(&blocks).with_context(|| input.display().to_string())?;
        print!("{doc}");
        return Ok(ExitCode::SUCCESS);
    }
    out.emit(&blocks, || {
        let mut t = String::new();
        for b in &blocks {
            let per: Vec<String> = mqm_core::Dimension::ALL
                .iter()
                .map(|&d| format!("{} {}", d.label(), b.annotation.errors.iter().filter(|e| e.dimension == d).count()))
                .collect();
            t.push_str(&format!("{}: {} annotations ({})\n", b.unit_id, b.annotation.errors.len(), per.join(", ")));
        }
        t
    })?;
    Ok(ExitCode::SUCCESS)
}

#[derive(Serialize)]
struct UnitViolations {
    unit_id: String,
    violations: Vec<Violation>,
}

fn cmd_validate(out: &Out, input: &Path, corpus: Corpus) -> Result<ExitCode> {
    let units = load_annotated(input, corpus)?;
    unique_ids(units.iter().map(|(u, _)| u.id.as_str()))?;
    let report: Vec<UnitViolations> = units
        .iter()
        .map(|(u, a)| UnitViolations { unit_id: u.id.clone(), violations: validate_annotation(u, a) })
        .filter(|v| !v.violations.is_empty())
        .collect();
    let errors = report.iter().flat_map(|r| &r.violations).filter(|v| v.is_error()).count();
    for r in &report {
        for v in &r.violations {
            eprintln!("{}: unit `{}`: {v}", input.display(), r.unit_id);
        }
    }
    out.emit(&report, || format!("{} units checked, {} with findings, {} errors\n", units.len(), report.len(), errors))?;
    Ok(if errors == 0 { ExitCode::SUCCESS } else { ExitCode::from(1) })
}

fn cmd_score(out: &Out, input: &Path, corpus: Corpus, top: usize) -> Result<ExitCode> {
    let units = load_annotated(input, corpus)?;
    let anns: Vec<_> = units.into_iter().map(|(_, a)| a).collect();
    let report = score_dataset(&anns).with_context(|| input.display().to_string())?;
    out.emit(&report, || report.to_text_with_top(top))?;
    Ok(ExitCode::SUCCESS)
}

/// Surface metrics are higher-is-better, MQM penalties lower-is-better.
fn auto_inverted(name: &str) -> bool {
    let n = name.to_ascii_lowercase();
    n.starts_with("bleu") || n.starts_with("chrf")
}

fn cmd_corr(out: &Out, input: &Path, columns: Option<&str>, variant: TauVariant, invert: Option<&str>, auto: bool) -> Result<ExitCode> {
    let table = load_table(input)?;
    let wanted: Vec<String> = match columns {
        Some(c) => parse_list(c)?,
        None => table.names.iter().filter(|n| !matches!(n.as_str(), "id" | "unit_id")).cloned().collect(),
    };
    if wanted.len() < 2 {
        return Err(usage("need at least two columns to correlate"));
    }
    let extra: Vec<String> = invert.map(parse_list).transpose()?.unwrap_or_default();
    let mut cols = Vec::new();
    for name in &wanted {
        let values = table
            .column(name)
            .with_context(|| format!("{}: no numeric column `{name}` (have: {})", input.display(), table.names.join(", ")))?;
        let mut c = NamedColumn::new(name.clone(), values.to_vec());
        if extra.contains(name) || (auto && auto_inverted(name)) {
            c = c.inverted();
        }
        cols.push(c);
    }
    let m = correlation_matrix(&cols, variant)?;
    out.emit(&m, || m.to_text())?;
    Ok(ExitCode::SUCCESS)
}

#[derive(Serialize)]
struct MetricsRow {
    unit_id: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    accuracy: Option<u32>,
    #[serde(skip_serializing_if = "Option::is_none")]
    fluency: Option<u32>,
    #[serde(skip_serializing_if = "Option::is_none")]
    style: Option<u32>,
    #[serde(skip_serializing_if = "Option::is_none")]
    total: Option<u32>,
    bleu: f64,
    chrf: f64,
}

fn cmd_metrics(out: &Out, input: &Path, output: Option<&Path>, corpus: Corpus, bleu: &BleuConfig, chrf: &ChrfConfig) -> Result<ExitCode> {
    let records = load_dataset(input, corpus)?;
    let missing: Vec<&str> =
        records.iter().filter(|r| r.unit.reference.is_none() || r.unit.hypothesis.is_none()).map(|r| r.unit.id.as_str()).collect();
    if !missing.is_empty() {
        bail!("{}: {} unit(s) lack a reference or hypothesis: {}", input.display(), missing.len(), missing.join(", "));
    }
    let units: Vec<_> = records.iter().map(|r| r.unit.clone()).collect();
    let rows = score_units(&units, bleu, chrf).map_err(|(id, e)| anyhow::anyhow!("{}: unit `{id}`: {e}", input.display()))?;
    let mut table = Vec::with_capacity(rows.len());
    for (r, m) in records.iter().zip(rows) {
        let gold = r.gold_score().with_context(|| format!("{}: unit `{}`", input.display(), r.unit.id))?;
        table.push(MetricsRow {
            unit_id: m.unit_id,
            accuracy: gold.map(|g| g.accuracy),
            fluency: gold.map(|g| g.fluency),
            style: gold.map(|g| g.style),
            total: gold.map(|g| g.total),
            bleu: m.bleu,
            chrf: m.chrf,
        });
    }
    let scored = table.iter().all(|r| r.total.is_some());
    let tsv = {
        let mut t = String::from(if scored { "unit_id\taccuracy\tfluency\tstyle\ttotal\tbleu\tchrf\n" } else { "unit_id\tbleu\tchrf\n" });
        for r in &table {
            match (scored, r.accuracy, r.fluency, r.style, r.total) {
                (true, Some(a), Some(f), Some(s), Some(tot)) => {
                    t.push_str(&format!("{}\t{a}\t{f}\t{s}\t{tot}\t{:.6}\t{:.6}\n", r.unit_id, r.bleu, r.chrf))
                }
                _ => t.push_str(&format!("{}\t{:.6}\t{:.6}\n", r.unit_id, r.bleu, r.chrf)),
            }
        }
        t
    };
    if let Some(path) = output {
        write_file(path, tsv.as_bytes())?;
    }
    out.emit(&table, || tsv.clone())?;
    Ok(ExitCode::SUCCESS)
}

fn cmd_split(out: &Out, input: &Path, corpus: Corpus, seed: u64, sizes: Option<SplitSizes>, out_dir: &Path) -> Result<ExitCode> {
    let records = load_dataset(input, corpus)?;
    let sizes = sizes.unwrap_or_else(|| SplitSizes::default().scaled_to(records.len()));
    let split = sample_and_split(&records, seed, sizes)?;
    fs::create_dir_all(out_dir).with_context(|| out_dir.display().to_string())?;
    #[derive(Serialize)]
    struct Part {
        name: &'static str,
        path: PathBuf,
        units: usize,
        global_voices: usize,
        ted_talks_2020: usize,
    }
    let mut parts = Vec::new();
    for (name, part) in split.parts() {
        let path = out_dir.join(format!("{name}.jsonl"));
        write_file(&path, records_to_jsonl(part).as_bytes())?;
        let gv = part.iter().filter(|r| r.unit.corpus == Corpus::GlobalVoices).count();
        parts.push(Part { name, path, units: part.len(), global_voices: gv, ted_talks_2020: part.len() - gv });
    }
    out.emit(&parts, || {
        let mut t = format!("{:<12} {:>6} {:>8} {:>8}\n", "part", "units", "gv", "ted");
        for p in &parts {
            t.push_str(&format!("{:<12} {:>6} {:>8} {:>8}\n", p.name, p.units, p.global_voices, p.ted_talks_2020));
        }
        t
    })?;
    Ok(ExitCode::SUCCESS)
}
