//! HTTP routes.

use std::collections::BTreeMap;
use std::sync::Arc;

use axum::extract::rejection::JsonRejection;
use axum::extract::{Path, Query, State};
use axum::http::{header, HeaderMap, HeaderValue, Method, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post, put};
use axum::{Json, Router};
use mqm_core::corpus::{records_to_jsonl, DatasetRecord};
use mqm_core::model::{Corpus, ErrorAnnotation, MqmScore, TranslationUnit, Violation};
use mqm_core::parser::{serialize_document, AnnotatedBlock};
use mqm_core::score_unit;
use serde::{Deserialize, Serialize};
use serde_json::json;
use tower_http::cors::{AllowOrigin, Any, CorsLayer};

use crate::store::{AnnotationTask, Store, StoreError, TaskStatus, WriteRequest};

pub const ANNOTATOR_HEADER: &str = "x-annotator-id";
pub const DEFAULT_PAGE: usize = 100;
pub const MAX_PAGE: usize = 1000;

pub type Shared = Arc<Store>;

#[derive(Debug)]
pub enum ApiError {
    BadRequest(String),
    NotFound(String),
    Unprocessable(Vec<Violation>),
    Conflict { expected: u64, current: u64 },
    Internal(String),
}

impl From<StoreError> for ApiError {
    fn from(e: StoreError) -> Self {
        match e {
            StoreError::UnknownUnit(id) => ApiError::NotFound(format!("unknown unit `{id}`")),
            StoreError::Invalid(v) => ApiError::Unprocessable(v),
            StoreError::StaleRevision { expected, current } => ApiError::Conflict { expected, current },
            other => ApiError::Internal(other.to_string()),
        }
    }
}

impl From<JsonRejection> for ApiError {
    fn from(e: JsonRejection) -> Self {
        ApiError::BadRequest(e.body_text())
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        let (status, body) = match self {
            ApiError::BadRequest(m) => (StatusCode::BAD_REQUEST, json!({ "error": m })),
            ApiError::NotFound(m) => (StatusCode::NOT_FOUND, json!({ "error": m })),
            ApiError::Unprocessable(v) => {
                (StatusCode::UNPROCESSABLE_ENTITY, json!({ "error": "annotation failed validation", "violations": v }))
            }
            ApiError::Conflict { expected, current } => {
                (StatusCode::CONFLICT, json!({ "error": "stale revision", "expected_revision": expected, "current_revision": current }))
            }
            ApiError::Internal(m) => {
                log::error!("{m}");
                (StatusCode::INTERNAL_SERVER_ERROR, json!({ "error": m }))
            }
        };
        (status, Json(body)).into_response()
    }
}

type ApiResult<T> = Result<T, ApiError>;

/// Runs blocking store work off the async executor.
async fn blocking<T: Send + 'static>(f: impl FnOnce() -> Result<T, StoreError> + Send + 'static) -> ApiResult<T> {
    tokio::task::spawn_blocking(f).await.map_err(|e| ApiError::Internal(e.to_string()))?.map_err(ApiError::from)
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct UnitSummary {
    pub unit_id: String,
    pub corpus: Corpus,
    pub status: TaskStatus,
    pub annotator: Option<String>,
    pub last_modified_ms: Option<u64>,
    pub revision: u64,
    pub score: Option<MqmScore>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct UnitPage {
    pub total: usize,
    pub offset: usize,
    pub limit: usize,
    pub items: Vec<UnitSummary>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct UnitDetail {
    pub unit: TranslationUnit,
    pub task: AnnotationTask,
    pub score: Option<MqmScore>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct WriteResponse {
    pub task: AnnotationTask,
    pub score: MqmScore,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct AnnotationBody {
    #[serde(default)]
    pub errors: Vec<ErrorAnnotation>,
    /// Optional; must match the path when present.
    pub unit_id: Option<String>,
    pub status: Option<TaskStatus>,
    /// Used when the annotator header is absent.
    pub annotator: Option<String>,
    /// Current revision as last seen by the client.
    pub revision: Option<u64>,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct Progress {
    pub total: usize,
    pub unannotated: usize,
    pub in_progress: usize,
    pub done: usize,
    pub by_corpus: BTreeMap<String, BTreeMap<String, usize>>,
    pub by_annotator: BTreeMap<String, usize>,
}

fn task_score(task: &AnnotationTask) -> Option<MqmScore> {
    task.annotation.as_ref().and_then(|a| score_unit(a).ok())
}

fn parse_opt<T: std::str::FromStr>(q: &BTreeMap<String, String>, key: &str) -> ApiResult<Option<T>>
where
    T::Err: std::fmt::Display,
{
    q.get(key).map(|v| v.parse::<T>().map_err(|e| ApiError::BadRequest(format!("bad `{key}`: {e}")))).transpose()
}

async fn list_units(State(store): State<Shared>, Query(q): Query<BTreeMap<String, String>>) -> ApiResult<Json<UnitPage>> {
    for key in q.keys() {
        if !matches!(key.as_str(), "status" | "corpus" | "offset" | "limit" | "annotator") {
            return Err(ApiError::BadRequest(format!("unknown filter `{key}`")));
        }
    }
    let status: Option<TaskStatus> = parse_opt(&q, "status")?;
    let corpus: Option<Corpus> = parse_opt(&q, "corpus")?;
    let offset: usize = parse_opt(&q, "offset")?.unwrap_or(0);
    let limit: usize = parse_opt(&q, "limit")?.unwrap_or(DEFAULT_PAGE);
    if limit == 0 || limit > MAX_PAGE {
        return Err(ApiError::BadRequest(format!("`limit` must be in 1..={MAX_PAGE}")));
    }
    let annotator = q.get("annotator");
    let state = store.snapshot();
    let matching: Vec<UnitSummary> = store
        .units()
        .values()
        .filter_map(|u| {
            let t = &state.tasks[&u.id];
            let keep = status.is_none_or(|s| t.status == s)
                && corpus.is_none_or(|c| u.corpus == c)
                && annotator.is_none_or(|a| t.annotator.as_ref() == Some(a));
            keep.then(|| UnitSummary {
                unit_id: u.id.clone(),
                corpus: u.corpus,
                status: t.status,
                annotator: t.annotator.clone(),
                last_modified_ms: t.last_modified_ms,
                revision: t.revision,
                score: task_score(t),
            })
        })
        .collect();
    let total = matching.len();
    let items = matching.into_iter().skip(offset).take(limit).collect();
    Ok(Json(UnitPage { total, offset, limit, items }))
}

async fn get_unit(State(store): State<Shared>, Path(id): Path<String>) -> ApiResult<Json<UnitDetail>> {
    let unit = store.unit(&id).ok_or_else(|| ApiError::NotFound(format!("unknown unit `{id}`")))?.clone();
    let task = store.snapshot().tasks[&id].clone();
    let score = task_score(&task);
    Ok(Json(UnitDetail { unit, task, score }))
}

fn annotator_of(headers: &HeaderMap, body: &AnnotationBody) -> ApiResult<String> {
    let from_header = match headers.get(ANNOTATOR_HEADER) {
        Some(v) => Some(v.to_str().map_err(|_| ApiError::BadRequest("annotator header is not valid text".into()))?.trim().to_string()),
        None => None,
    };
    match from_header.or_else(|| body.annotator.clone()) {
        Some(a) if !a.is_empty() => Ok(a),
        _ => Err(ApiError::BadRequest(format!("missing annotator id (`{ANNOTATOR_HEADER}` header)"))),
    }
}

fn check_path_id(id: &str, body: &AnnotationBody) -> ApiResult<()> {
    match &body.unit_id {
        Some(b) if b != id => Err(ApiError::BadRequest(format!("body unit_id `{b}` does not match path `{id}`"))),
        _ => Ok(()),
    }
}

async fn put_annotation(
    State(store): State<Shared>,
    Path(id): Path<String>,
    headers: HeaderMap,
    body: Result<Json<AnnotationBody>, JsonRejection>,
) -> ApiResult<Json<WriteResponse>> {
    let Json(body) = body?;
    if store.unit(&id).is_none() {
        return Err(ApiError::NotFound(format!("unknown unit `{id}`")));
    }
    check_path_id(&id, &body)?;
    let annotator = annotator_of(&headers, &body)?;
    let status = body.status.unwrap_or(TaskStatus::Done);
    if status == TaskStatus::Unannotated {
        return Err(ApiError::BadRequest("a write cannot set status `unannotated`".into()));
    }
    let req = WriteRequest { errors: body.errors, status, annotator, expected_revision: body.revision };
    let (task, score) = blocking(move || store.write(&id, req)).await?;
    Ok(Json(WriteResponse { task, score }))
}

async fn preview_score(
    State(store): State<Shared>,
    Path(id): Path<String>,
    body: Result<Json<AnnotationBody>, JsonRejection>,
) -> ApiResult<Json<MqmScore>> {
    let Json(body) = body?;
    check_path_id(&id, &body)?;
    Ok(Json(store.preview(&id, body.errors)?))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExportFormat {
    MqmText,
    Jsonl,
}

impl std::str::FromStr for ExportFormat {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "mqm-text" | "mqm" | "text" => Ok(Self::MqmText),
            "jsonl" => Ok(Self::Jsonl),
            _ => Err(format!("unknown export format `{s}` (expected mqm-text or jsonl)")),
        }
    }
}

async fn export(State(store): State<Shared>, Query(q): Query<BTreeMap<String, String>>) -> ApiResult<Response> {
    let format: ExportFormat = parse_opt(&q, "format")?.unwrap_or(ExportFormat::MqmText);
    let status: TaskStatus = parse_opt(&q, "status")?.unwrap_or(TaskStatus::Done);
    let annotator = q.get("annotator").cloned();
    let check = store.clone();
    blocking(move || check.verify_log()).await?;

    let state = store.snapshot();
    let picked: Vec<(&TranslationUnit, &AnnotationTask)> = store
        .units()
        .values()
        .map(|u| (u, &state.tasks[&u.id]))
        .filter(|(_, t)| t.status == status && t.annotation.is_some())
        .filter(|(_, t)| annotator.as_ref().is_none_or(|a| t.annotator.as_ref() == Some(a)))
        .collect();
    let (content_type, body) = match format {
        ExportFormat::MqmText => {
            let blocks: Vec<AnnotatedBlock> =
                picked.iter().map(|(u, t)| AnnotatedBlock::from_unit(u, t.annotation.clone().expect("filtered"))).collect();
            let text = serialize_document(&blocks).map_err(|e| ApiError::Internal(e.to_string()))?;
            ("text/plain; charset=utf-8", text)
        }
        ExportFormat::Jsonl => {
            let records: Vec<DatasetRecord> = picked
                .iter()
                .map(|(u, t)| {
                    let ann = t.annotation.as_ref().expect("filtered");
                    Ok(DatasetRecord {
                        unit: (*u).clone(),
                        errors: Some(ann.errors.clone()),
                        score: Some(score_unit(ann).map_err(|e| ApiError::Internal(e.to_string()))?),
                        annotator: t.annotator.clone(),
                    })
                })
                .collect::<ApiResult<_>>()?;
            ("application/x-ndjson", records_to_jsonl(&records))
        }
    };
    Ok(([(header::CONTENT_TYPE, HeaderValue::from_static(content_type))], body).into_response())
}

async fn progress(State(store): State<Shared>) -> Json<Progress> {
    let state = store.snapshot();
    let mut p = Progress { total: store.units().len(), ..Default::default() };
    for u in store.units().values() {
        let t = &state.tasks[&u.id];
        let label = match t.status {
            TaskStatus::Unannotated => {
                p.unannotated += 1;
                "unannotated"
            }
            TaskStatus::InProgress => {
                p.in_progress += 1;
                "in_progress"
            }
            TaskStatus::Done => {
                p.done += 1;
                "done"
            }
        };
        *p.by_corpus.entry(u.corpus.to_string()).or_default().entry(label.to_string()).or_default() += 1;
        if let (TaskStatus::Done, Some(a)) = (t.status, &t.annotator) {
            *p.by_annotator.entry(a.clone()).or_default() += 1;
        }
    }
    Json(p)
}

/// `cors_origin` of `None` allows any origin.
pub fn router(store: Shared, cors_origin: Option<&str>) -> Result<Router, String> {
    let origin = match cors_origin {
        None | Some("*") => AllowOrigin::from(Any),
        Some(o) => AllowOrigin::exact(HeaderValue::from_str(o).map_err(|e| format!("bad CORS origin `{o}`: {e}"))?),
    };
    let cors = CorsLayer::new()
        .allow_origin(origin)
        .allow_methods([Method::GET, Method::PUT, Method::POST, Method::OPTIONS])
        .allow_headers([header::CONTENT_TYPE, header::HeaderName::from_static(ANNOTATOR_HEADER)]);
    Ok(Router::new()
        .route("/units", get(list_units))
        .route("/units/{id}", get(get_unit))
        .route("/units/{id}/annotation", put(put_annotation))
        .route("/units/{id}/preview-score", post(preview_score))
        .route("/export", get(export))
        .route("/progress", get(progress))
        .layer(cors)
        .with_state(store))
}
