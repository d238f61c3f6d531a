//! Hypothesis generation: paraphrase the English source, then translate the
//! paraphrase into Korean.
//!
//! Providers are pluggable. [`MockProvider`] is deterministic and offline;
//! [`HttpProvider`] talks to a JSON endpoint whose location and key come from
//! `PROVIDER_BASE_URL` / `PROVIDER_API_KEY`.

use std::fs::{File, OpenOptions};
use std::io::{BufWriter, Write};
use std::path::PathBuf;
use std::sync::Mutex;
use std::time::{Duration, SystemTime, UNIX_EPOCH};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::json;
use thiserror::Error;

use crate::features::is_hangul;
use crate::model::TranslationUnit;

pub const SENTENCE_PLACEHOLDER: &str = "[English sentence]";

pub const PARAPHRASE_PROMPT: &str = "Please rewrite the given sentence in\nEnglish while maintaining the same\nmeaning, using different vocabulary\nor sentence structures:\n[English sentence]";

pub const ENV_BASE_URL: &str = "PROVIDER_BASE_URL";
pub const ENV_API_KEY: &str = "PROVIDER_API_KEY";

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ProviderError {
    #[error("transport error: {0}")]
    Transport(String),
    #[error("credential error: {0}")]
    Credential(String),
    #[error("unexpected provider response: {0}")]
    BadResponse(String),
    #[error("prompt template lacks the `[English sentence]` placeholder")]
    BadTemplate,
}

impl ProviderError {
    /// Only transport failures are worth retrying.
    pub fn is_retryable(&self) -> bool {
        matches!(self, ProviderError::Transport(_))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PromptTemplate(String);

impl PromptTemplate {
    pub fn new(template: impl Into<String>) -> Result<Self, ProviderError> {
        let t = template.into();
        if !t.contains(SENTENCE_PLACEHOLDER) {
            return Err(ProviderError::BadTemplate);
        }
        Ok(Self(t))
    }

    pub fn render(&self, sentence: &str) -> String {
        self.0.replace(SENTENCE_PLACEHOLDER, sentence)
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl Default for PromptTemplate {
    fn default() -> Self {
        Self(PARAPHRASE_PROMPT.to_string())
    }
}

pub trait Provider: Send + Sync {
    fn name(&self) -> &str;
    /// `prompt` is the rendered template; `source` is the bare sentence.
    fn paraphrase(&self, source: &str, prompt: &str) -> Result<String, ProviderError>;
    fn translate(&self, text: &str) -> Result<String, ProviderError>;
}

/// Returns the source unchanged as its paraphrase and a deterministic
/// Hangul pseudo-translation: capitalized Latin words and digit runs are
/// copied, every other word becomes hash-derived syllables.
#[derive(Debug, Clone, Default)]
pub struct MockProvider;

fn fnv1a(text: &str) -> u64 {
    text.bytes().fold(0xcbf2_9ce4_8422_2325u64, |h, b| (h ^ b as u64).wrapping_mul(0x0100_0000_01b3))
}

fn pseudo_word(word: &str) -> String {
    let core: String = word.chars().filter(|c| c.is_alphanumeric()).collect();
    let trailing: String = word.chars().rev().take_while(|c| c.is_ascii_punctuation()).collect::<Vec<_>>().into_iter().rev().collect();
    if core.is_empty() {
        return word.to_string();
    }
    let keep = core.chars().all(|c| c.is_ascii_digit()) || core.chars().next().is_some_and(|c| c.is_ascii_uppercase());
    if keep {
        return word.to_string();
    }
    let syllables = 1 + core.chars().count() / 3;
    let mut h = fnv1a(&core.to_lowercase());
    let mut out = String::new();
    for _ in 0..syllables {
        let code = 0xAC00 + (h % 11172) as u32;
        out.push(char::from_u32(code).expect("hangul block"));
        h = h.rotate_left(17).wrapping_mul(0x9E37_79B9_7F4A_7C15);
    }
    debug_assert!(out.chars().all(is_hangul));
    out + &trailing
}

impl Provider for MockProvider {
    fn name(&self) -> &str {
        "mock"
    }

    fn paraphrase(&self, source: &str, _prompt: &str) -> Result<String, ProviderError> {
        Ok(source.to_string())
    }

    fn translate(&self, text: &str) -> Result<String, ProviderError> {
        Ok(text.split_whitespace().map(pseudo_word).collect::<Vec<_>>().join(" "))
    }
}

/// JSON-over-HTTP provider.
///
/// `POST {base}/paraphrase` with `{"prompt": ...}` and
/// `POST {base}/translate` with `{"text", "source_lang", "target_lang"}`;
/// both answer `{"text": ...}`. The key is sent as a bearer token.
pub struct HttpProvider {
    base_url: String,
    api_key: String,
    client: reqwest::blocking::Client,
}

#[derive(Deserialize)]
struct TextResponse {
    text: String,
}

impl HttpProvider {
    pub fn new(base_url: impl Into<String>, api_key: impl Into<String>, timeout: Duration) -> Result<Self, ProviderError> {
        let client = reqwest::blocking::Client::builder().timeout(timeout).build().map_err(|e| ProviderError::Transport(e.to_string()))?;
        Ok(Self { base_url: base_url.into().trim_end_matches('/').to_string(), api_key: api_key.into(), client })
    }

    /// Reads the endpoint and key from the environment only.
    pub fn from_env(timeout: Duration) -> Result<Self, ProviderError> {
        let base = std::env::var(ENV_BASE_URL).map_err(|_| ProviderError::Credential(format!("{ENV_BASE_URL} is not set")))?;
        let key = std::env::var(ENV_API_KEY).map_err(|_| ProviderError::Credential(format!("{ENV_API_KEY} is not set")))?;
        Self::new(base, key, timeout)
    }

    fn post(&self, path: &str, body: serde_json::Value) -> Result<String, ProviderError> {
        let resp = self
            .client
            .post(format!("{}/{path}", self.base_url))
            .bearer_auth(&self.api_key)
            .json(&body)
            .send()
            .map_err(|e| ProviderError::Transport(e.to_string()))?;
        let status = resp.status();
        if status == reqwest::StatusCode::UNAUTHORIZED || status == reqwest::StatusCode::FORBIDDEN {
            return Err(ProviderError::Credential(format!("HTTP {status}")));
        }
        if status.is_server_error() || status == reqwest::StatusCode::TOO_MANY_REQUESTS {
            return Err(ProviderError::Transport(format!("HTTP {status}")));
        }
        if !status.is_success() {
            return Err(ProviderError::BadResponse(format!("HTTP {status}")));
        }
        let parsed: TextResponse = resp.json().map_err(|e| ProviderError::BadResponse(e.to_string()))?;
        Ok(parsed.text)
    }
}

impl Provider for HttpProvider {
    fn name(&self) -> &str {
        "http"
    }

    fn paraphrase(&self, _source: &str, prompt: &str) -> Result<String, ProviderError> {
        self.post("paraphrase", json!({ "prompt": prompt }))
    }

    fn translate(&self, text: &str) -> Result<String, ProviderError> {
        self.post("translate", json!({ "text": text, "source_lang": "en", "target_lang": "ko" }))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ProviderSpec {
    Mock,
    /// Endpoint and key come from the environment at build time.
    Http {
        timeout_secs: u64,
    },
}

impl ProviderSpec {
    pub fn build(&self) -> Result<Box<dyn Provider>, ProviderError> {
        match self {
            ProviderSpec::Mock => Ok(Box::new(MockProvider)),
            ProviderSpec::Http { timeout_secs } => Ok(Box::new(HttpProvider::from_env(Duration::from_secs(*timeout_secs))?)),
        }
    }
}

#[derive(Debug, Clone)]
pub struct BuildOptions {
    pub template: PromptTemplate,
    pub max_retries: u32,
    pub parallelism: usize,
    pub retry_backoff: Duration,
    pub audit_log: Option<PathBuf>,
}

impl Default for BuildOptions {
    fn default() -> Self {
        Self {
            template: PromptTemplate::default(),
            max_retries: 2,
            parallelism: 4,
            retry_backoff: Duration::from_millis(200),
            audit_log: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct UnitFailure {
    pub unit_id: String,
    pub step: String,
    pub attempts: u32,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BuildReport {
    /// Input units in order; hypotheses filled where generation succeeded.
    pub units: Vec<TranslationUnit>,
    pub generated: usize,
    pub skipped: usize,
    pub failures: Vec<UnitFailure>,
}

#[derive(Debug, Error)]
pub enum BuildError {
    #[error("cannot open audit log: {0}")]
    Audit(#[from] std::io::Error),
    #[error("thread pool: {0}")]
    Pool(String),
}

struct Audit(Option<Mutex<BufWriter<File>>>);

impl Audit {
    fn record(&self, entry: serde_json::Value) {
        if let Some(w) = &self.0 {
            let mut w = w.lock().expect("audit lock");
            // audit failures must not abort generation
            let _ = writeln!(w, "{entry}").and_then(|_| w.flush());
        }
    }
}

fn now_ms() -> u128 {
    SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_millis()).unwrap_or(0)
}

fn with_retries(
    audit: &Audit,
    opts: &BuildOptions,
    unit_id: &str,
    step: &str,
    request: &str,
    call: impl Fn() -> Result<String, ProviderError>,
) -> Result<String, UnitFailure> {
    let mut attempt = 0;
    loop {
        attempt += 1;
        let result = call();
        audit.record(json!({
            "ts_ms": now_ms() as u64,
            "unit_id": unit_id,
            "step": step,
            "attempt": attempt,
            "request": request,
            "response": result.as_ref().ok(),
            "error": result.as_ref().err().map(|e| e.to_string()),
        }));
        match result {
            Ok(text) if !text.trim().is_empty() => return Ok(text),
            Ok(_) => {
                return Err(UnitFailure { unit_id: unit_id.into(), step: step.into(), attempts: attempt, message: "empty response".into() })
            }
            Err(e) if e.is_retryable() && attempt <= opts.max_retries => {
                std::thread::sleep(opts.retry_backoff * attempt);
            }
            Err(e) => return Err(UnitFailure { unit_id: unit_id.into(), step: step.into(), attempts: attempt, message: e.to_string() }),
        }
    }
}

/// Fills missing hypotheses. Units that already have one are left alone,
/// so re-running after a partial failure only retries the failures.
pub fn build_hypotheses(units: &[TranslationUnit], provider: &dyn Provider, opts: &BuildOptions) -> Result<BuildReport, BuildError> {
    let audit = Audit(match &opts.audit_log {
        Some(p) => Some(Mutex::new(BufWriter::new(OpenOptions::new().create(true).append(true).open(p)?))),
        None => None,
    });
    let pool = rayon::ThreadPoolBuilder::new().num_threads(opts.parallelism.max(1)).build().map_err(|e| BuildError::Pool(e.to_string()))?;

    let results: Vec<Option<Result<String, UnitFailure>>> = pool.install(|| {
        units
            .par_iter()
            .map(|u| {
                if u.hypothesis.as_deref().is_some_and(|h| !h.trim().is_empty()) {
                    return None;
                }
                let prompt = opts.template.render(&u.source);
                let run = || -> Result<String, UnitFailure> {
                    let para = with_retries(&audit, opts, &u.id, "paraphrase", &prompt, || provider.paraphrase(&u.source, &prompt))?;
                    with_retries(&audit, opts, &u.id, "translate", &para, || provider.translate(&para))
                };
                Some(run())
            })
            .collect()
    });

    let mut report = BuildReport { units: Vec::with_capacity(units.len()), generated: 0, skipped: 0, failures: Vec::new() };
    for (u, r) in units.iter().zip(results) {
        let mut u = u.clone();
        match r {
            None => report.skipped += 1,
            Some(Ok(h)) => {
                u.hypothesis = Some(h);
                report.generated += 1;
            }
            Some(Err(f)) => report.failures.push(f),
        }
        report.units.push(u);
    }
    Ok(report)
}
