//! HTTP facade over a running pipeline.

use std::collections::HashMap;
use std::path::PathBuf;
use std::time::Duration;

use axum::body::Bytes;
use axum::extract::rejection::{PathRejection, QueryRejection};
use axum::extract::{Path, Query, State};
use axum::http::{header, StatusCode};
use axum::response::{Html, IntoResponse, Redirect, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use notobot_core::audience::{BinPathStep, InterventionMessage};
use notobot_pipeline::{AuditEvent, PendingIntervention, PipelineHandle, Status, StatusCounts};
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use tower_http::services::ServeDir;

use crate::error::ApiFailure;

pub const DEFAULT_PAGE_LIMIT: usize = 50;
pub const MAX_PAGE_LIMIT: usize = 1000;
pub const DEFAULT_POLL_TIMEOUT_MS: u64 = 25_000;
pub const MAX_POLL_TIMEOUT_MS: u64 = 60_000;
pub const DEFAULT_OPERATOR: &str = "operator";

const PLACEHOLDER_UI: &str = include_str!("../ui/index.html");

#[derive(Clone)]
pub struct AppState {
    pub pipeline: PipelineHandle,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StatusBody {
    pub scanner_enabled: bool,
    pub model_loaded: bool,
    pub audience_model_loaded: bool,
    pub counts: StatusCounts,
    pub scanned: u64,
    pub last_event_id: u64,
    pub source_exhausted: bool,
    pub pending_retries: usize,
    /// Source exhausted, nothing left to classify and no deliveries queued.
    pub idle: bool,
    pub ticks: u64,
    pub uptime_secs: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CandidatePage {
    pub items: Vec<PendingIntervention>,
    pub total: usize,
    pub limit: usize,
    pub offset: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InterventionBody {
    pub pending_id: u64,
    pub status: Status,
    pub confidence: Option<f64>,
    pub bin_id: usize,
    pub proposed_message: InterventionMessage,
    pub bin_path: Vec<BinPathStep>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UpdatesBody {
    pub events: Vec<AuditEvent>,
    pub last_event_id: u64,
}

pub type ApiResult<T> = Result<T, ApiFailure>;

/// All JSON routes plus `/ui`. With no `ui_dir` a built-in placeholder page
/// is served.
pub fn router(state: AppState, ui_dir: Option<PathBuf>) -> Router {
    let api = Router::new()
        .route("/status", get(status))
        .route("/scanner", post(set_scanner))
        .route("/candidates", get(list_candidates))
        .route("/candidates/updates", get(updates))
        .route("/candidates/{id}", get(get_candidate))
        .route("/candidates/{id}/approve", post(approve))
        .route("/candidates/{id}/reject", post(reject))
        .route("/candidates/{id}/intervention", get(intervention))
        .route("/model/tree", get(model_tree))
        .route("/events", get(events))
        .route("/", get(|| async { Redirect::temporary("/ui/") }));
    let ui = match ui_dir {
        Some(dir) => Router::new().nest_service("/ui", ServeDir::new(dir).append_index_html_on_directories(true)),
        None => Router::new()
            .route("/ui", get(placeholder_ui))
            .route("/ui/", get(placeholder_ui))
            .route("/ui/index.html", get(placeholder_ui)),
    };
    api.merge(ui)
        .fallback(not_found)
        .method_not_allowed_fallback(method_not_allowed)
        .with_state(state)
}

async fn placeholder_ui() -> Html<&'static str> {
    Html(PLACEHOLDER_UI)
}

async fn not_found() -> ApiFailure {
    ApiFailure::not_found("no such route", Value::Null)
}

async fn method_not_allowed() -> ApiFailure {
    ApiFailure::new(StatusCode::METHOD_NOT_ALLOWED, "method_not_allowed", "method not allowed", Value::Null)
}

fn status_body(state: &AppState) -> StatusBody {
    let snap = state.pipeline.snapshot();
    StatusBody {
        scanner_enabled: snap.state.scanner_enabled,
        model_loaded: state.pipeline.model_loaded(),
        audience_model_loaded: state.pipeline.group_model().is_some(),
        counts: snap.state.counts(),
        scanned: snap.state.scanned,
        last_event_id: snap.state.last_event_id,
        source_exhausted: snap.source_exhausted,
        pending_retries: snap.pending_retries,
        idle: snap.is_idle(),
        ticks: snap.ticks,
        uptime_secs: state.pipeline.uptime().as_secs_f64(),
    }
}

async fn status(State(state): State<AppState>) -> Json<StatusBody> {
    Json(status_body(&state))
}

/// Parses a JSON object body; an empty body is `{}`.
fn json_object(body: &Bytes) -> ApiResult<serde_json::Map<String, Value>> {
    if body.iter().all(u8::is_ascii_whitespace) {
        return Ok(serde_json::Map::new());
    }
    match serde_json::from_slice::<Value>(body) {
        Ok(Value::Object(m)) => Ok(m),
        Ok(_) => Err(ApiFailure::bad_request("body must be a JSON object", Value::Null)),
        Err(e) => Err(ApiFailure::bad_request(format!("malformed JSON: {e}"), Value::Null)),
    }
}

async fn set_scanner(State(state): State<AppState>, body: Bytes) -> ApiResult<Json<StatusBody>> {
    let obj = json_object(&body)?;
    let enabled = match obj.get("enabled") {
        Some(Value::Bool(b)) => *b,
        Some(other) => {
            return Err(ApiFailure::bad_request(
                "`enabled` must be a boolean",
                json!({ "field": "enabled", "got": other }),
            ))
        }
        None => return Err(ApiFailure::bad_request("missing `enabled`", json!({ "field": "enabled" }))),
    };
    state.pipeline.set_scanner(enabled).await?;
    Ok(Json(status_body(&state)))
}

type QueryMap = Result<Query<HashMap<String, String>>, QueryRejection>;

fn query_map(q: QueryMap) -> ApiResult<HashMap<String, String>> {
    q.map(|Query(m)| m)
        .map_err(|e| ApiFailure::bad_request(format!("bad query string: {e}"), Value::Null))
}

fn number_param<T: std::str::FromStr>(q: &HashMap<String, String>, name: &str, default: T) -> ApiResult<T> {
    match q.get(name) {
        None => Ok(default),
        Some(raw) => raw.parse().map_err(|_| {
            ApiFailure::bad_request(format!("`{name}` must be a non-negative integer"), json!({ "field": name, "got": raw }))
        }),
    }
}

async fn list_candidates(State(state): State<AppState>, q: QueryMap) -> ApiResult<Json<CandidatePage>> {
    let q = query_map(q)?;
    let status = match q.get("status") {
        None => None,
        Some(raw) => Some(Status::parse(raw).ok_or_else(|| {
            ApiFailure::bad_request(
                format!("unknown status `{raw}`"),
                json!({ "field": "status", "allowed": Status::ALL.map(Status::as_str) }),
            )
        })?),
    };
    let limit = number_param(&q, "limit", DEFAULT_PAGE_LIMIT)?;
    if limit == 0 || limit > MAX_PAGE_LIMIT {
        return Err(ApiFailure::bad_request(
            format!("`limit` must be between 1 and {MAX_PAGE_LIMIT}"),
            json!({ "field": "limit" }),
        ));
    }
    let offset = number_param(&q, "offset", 0usize)?;
    let snap = state.pipeline.snapshot();
    let matching: Vec<&PendingIntervention> = snap
        .state
        .candidates
        .values()
        .filter(|c| status.is_none_or(|s| c.status == s))
        .collect();
    let items = matching.iter().skip(offset).take(limit).map(|c| (*c).clone()).collect();
    Ok(Json(CandidatePage { items, total: matching.len(), limit, offset }))
}

fn candidate_id(p: Result<Path<String>, PathRejection>) -> ApiResult<u64> {
    let Path(raw) = p.map_err(|e| ApiFailure::bad_request(e.to_string(), Value::Null))?;
    raw.parse()
        .map_err(|_| ApiFailure::bad_request("candidate id must be a non-negative integer", json!({ "got": raw })))
}

fn lookup(state: &AppState, id: u64) -> ApiResult<PendingIntervention> {
    state
        .pipeline
        .snapshot()
        .state
        .candidate(id)
        .cloned()
        .ok_or_else(|| ApiFailure::not_found(format!("no candidate with id {id}"), json!({ "id": id })))
}

async fn get_candidate(
    State(state): State<AppState>,
    p: Result<Path<String>, PathRejection>,
) -> ApiResult<Json<PendingIntervention>> {
    let id = candidate_id(p)?;
    Ok(Json(lookup(&state, id)?))
}

fn operator(body: &Bytes) -> ApiResult<String> {
    let obj = json_object(body)?;
    match obj.get("operator_id") {
        None | Some(Value::Null) => Ok(DEFAULT_OPERATOR.into()),
        Some(Value::String(s)) if !s.trim().is_empty() => Ok(s.clone()),
        Some(other) => Err(ApiFailure::bad_request(
            "`operator_id` must be a non-empty string",
            json!({ "field": "operator_id", "got": other }),
        )),
    }
}

async fn approve(
    State(state): State<AppState>,
    p: Result<Path<String>, PathRejection>,
    body: Bytes,
) -> ApiResult<Json<PendingIntervention>> {
    let id = candidate_id(p)?;
    let op = operator(&body)?;
    Ok(Json(state.pipeline.approve(id, &op).await?))
}

async fn reject(
    State(state): State<AppState>,
    p: Result<Path<String>, PathRejection>,
    body: Bytes,
) -> ApiResult<Json<PendingIntervention>> {
    let id = candidate_id(p)?;
    let op = operator(&body)?;
    Ok(Json(state.pipeline.reject(id, &op).await?))
}

async fn intervention(
    State(state): State<AppState>,
    p: Result<Path<String>, PathRejection>,
) -> ApiResult<Json<InterventionBody>> {
    let id = candidate_id(p)?;
    let c = lookup(&state, id)?;
    let Some(proposal) = c.proposal else {
        return Err(ApiFailure::conflict(
            "not_classified",
            format!("candidate {id} has no matched intervention (status {})", c.status),
            json!({ "id": id, "status": c.status }),
        ));
    };
    Ok(Json(InterventionBody {
        pending_id: id,
        status: c.status,
        confidence: c.confidence,
        bin_id: proposal.bin_id,
        proposed_message: proposal.message,
        bin_path: proposal.bin_path,
    }))
}

async fn model_tree(State(state): State<AppState>) -> ApiResult<Response> {
    let Some(model) = state.pipeline.group_model() else {
        return Err(ApiFailure::conflict("model_not_loaded", "no audience model is loaded", Value::Null));
    };
    let body = model
        .to_json()
        .map_err(|e| ApiFailure::new(StatusCode::INTERNAL_SERVER_ERROR, "internal", e.to_string(), Value::Null))?;
    Ok(([(header::CONTENT_TYPE, "application/json")], body).into_response())
}

fn updates_body(state: &AppState, events: Vec<AuditEvent>) -> UpdatesBody {
    let last_event_id = events
        .last()
        .map(|e| e.event_id)
        .unwrap_or_else(|| state.pipeline.snapshot().state.last_event_id);
    UpdatesBody { events, last_event_id }
}

/// Long-poll: returns as soon as any event newer than `since` exists, or
/// an empty list after `timeout_ms`.
async fn updates(State(state): State<AppState>, q: QueryMap) -> ApiResult<Json<UpdatesBody>> {
    let q = query_map(q)?;
    let since = number_param(&q, "since", 0u64)?;
    let timeout = number_param(&q, "timeout_ms", DEFAULT_POLL_TIMEOUT_MS)?.min(MAX_POLL_TIMEOUT_MS);
    let limit = number_param(&q, "limit", MAX_PAGE_LIMIT)?.clamp(1, MAX_PAGE_LIMIT);
    let events = state.pipeline.wait_events(since, limit, Duration::from_millis(timeout)).await;
    Ok(Json(updates_body(&state, events)))
}

/// Non-blocking read of the audit log.
async fn events(State(state): State<AppState>, q: QueryMap) -> ApiResult<Json<UpdatesBody>> {
    let q = query_map(q)?;
    let since = number_param(&q, "since", 0u64)?;
    let limit = number_param(&q, "limit", MAX_PAGE_LIMIT)?.clamp(1, MAX_PAGE_LIMIT);
    let events = state.pipeline.events_since(since, limit);
    Ok(Json(updates_body(&state, events)))
}
