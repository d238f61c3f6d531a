//! Python bindings. Structured results come back as plain dicts and lists.

use mqm_core::metrics::{self, BleuConfig, ChrfConfig};
use mqm_core::model::{validate_against_text, UnitAnnotation};
use mqm_core::parser::{canonicalize as canon, parse_document};
use mqm_core::rank_stats::{kendall_tau as tau, tau_significance, TauVariant, MIN_SIGNIFICANCE_N};
use mqm_core::score_unit;
use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;
use serde::Serialize;

fn err(e: impl std::fmt::Display) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn to_py<'py>(py: Python<'py>, value: &impl Serialize) -> PyResult<Bound<'py, PyAny>> {
    let text = serde_json::to_string(value).map_err(err)?;
    py.import("json")?.call_method1("loads", (text,))
}

fn from_py<T: serde::de::DeserializeOwned>(py: Python<'_>, obj: &Bound<'_, PyAny>) -> PyResult<T> {
    let text: String = py.import("json")?.call_method1("dumps", (obj,))?.extract()?;
    serde_json::from_str(&text).map_err(err)
}

/// Parse an annotation document into a list of blocks.
#[pyfunction]
fn parse<'py>(py: Python<'py>, text: &str) -> PyResult<Bound<'py, PyAny>> {
    to_py(py, &parse_document(text).map_err(err)?)
}

/// Re-render a document in canonical form.
#[pyfunction]
fn canonicalize(text: &str) -> PyResult<String> {
    canon(text).map_err(err)
}

#[derive(Serialize)]
struct UnitScore<'a> {
    unit_id: &'a str,
    accuracy: u32,
    fluency: u32,
    style: u32,
    total: u32,
}

/// Per-unit scores of every block in a document.
#[pyfunction]
fn score<'py>(py: Python<'py>, text: &str) -> PyResult<Bound<'py, PyAny>> {
    let blocks = parse_document(text).map_err(err)?;
    let mut rows = Vec::with_capacity(blocks.len());
    for b in &blocks {
        let s = score_unit(&b.annotation).map_err(err)?;
        rows.push(UnitScore { unit_id: &b.unit_id, accuracy: s.accuracy, fluency: s.fluency, style: s.style, total: s.total });
    }
    to_py(py, &rows)
}

/// Score one annotation given as `{"unit_id": ..., "errors": [...]}`.
#[pyfunction]
fn score_annotation<'py>(py: Python<'py>, annotation: &Bound<'py, PyAny>) -> PyResult<Bound<'py, PyAny>> {
    let ann: UnitAnnotation = from_py(py, annotation)?;
    to_py(py, &score_unit(&ann).map_err(err)?)
}

/// Blocks with violations, each as `{"unit_id", "violations"}`.
#[pyfunction]
fn validate<'py>(py: Python<'py>, text: &str) -> PyResult<Bound<'py, PyAny>> {
    #[derive(Serialize)]
    struct Row<'a> {
        unit_id: &'a str,
        violations: Vec<mqm_core::model::Violation>,
    }
    let blocks = parse_document(text).map_err(err)?;
    let rows: Vec<Row> = blocks
        .iter()
        .map(|b| Row { unit_id: &b.unit_id, violations: validate_against_text(&b.source, Some(&b.hypothesis), &b.annotation) })
        .filter(|r| !r.violations.is_empty())
        .collect();
    to_py(py, &rows)
}

/// Kendall tau with pair counts; p-value and stars are filled when n >= 10.
#[pyfunction]
#[pyo3(signature = (x, y, variant = "gamma"))]
fn kendall_tau<'py>(py: Python<'py>, x: Vec<f64>, y: Vec<f64>, variant: &str) -> PyResult<Bound<'py, PyAny>> {
    let variant: TauVariant = variant.parse().map_err(err)?;
    let mut r = tau(&x, &y, variant).map_err(err)?;
    if r.n >= MIN_SIGNIFICANCE_N {
        r = tau_significance(r).map_err(err)?;
    }
    to_py(py, &r)
}

/// Smoothed sentence BLEU in [0, 1].
#[pyfunction]
#[pyo3(signature = (hypothesis, reference, max_order = 4, epsilon = 0.1))]
fn sentence_bleu(hypothesis: &str, reference: &str, max_order: usize, epsilon: f64) -> PyResult<f64> {
    let cfg = BleuConfig { max_ngram_order: max_order, smoothing_epsilon: epsilon, ..Default::default() };
    metrics::sentence_bleu(hypothesis, reference, &cfg).map_err(err)
}

/// Character n-gram F-score in [0, 1].
#[pyfunction]
#[pyo3(signature = (hypothesis, reference, order = 6, beta = 2.0))]
fn chrf(hypothesis: &str, reference: &str, order: usize, beta: f64) -> PyResult<f64> {
    metrics::chrf(hypothesis, reference, &ChrfConfig { char_ngram_order: order, beta }).map_err(err)
}

#[pymodule]
fn mqm_eval(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_function(wrap_pyfunction!(parse, m)?)?;
    m.add_function(wrap_pyfunction!(canonicalize, m)?)?;
    m.add_function(wrap_pyfunction!(score, m)?)?;
    m.add_function(wrap_pyfunction!(score_annotation, m)?)?;
    m.add_function(wrap_pyfunction!(validate, m)?)?;
    m.add_function(wrap_pyfunction!(kendall_tau, m)?)?;
    m.add_function(wrap_pyfunction!(sentence_bleu, m)?)?;
    m.add_function(wrap_pyfunction!(chrf, m)?)?;
    m.add("__version__", env!("CARGO_PKG_VERSION"))?;
    Ok(())
}
