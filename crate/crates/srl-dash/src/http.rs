use std::sync::Arc;

use axum::body::Bytes;
use axum::extract::{Path, Query, Request, State};
use axum::http::{header, HeaderValue, StatusCode};
use axum::middleware::{self, Next};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use serde::{Deserialize, Serialize};
use serde_json::json;

use srl_dash_core::ingest::WeekRange;
use srl_dash_core::insights::{ContentBundle, PageId, View};
use srl_dash_core::usage::{usage_report, UsageEvent};

use crate::error::ServiceError;
use crate::help::{get_help, TOPICS};
use crate::store::ContentStore;
use crate::usage_log::UsageLog;

pub const GENERATION_HEADER: &str = "x-generation";

#[derive(Clone)]
pub struct AppState {
    pub store: Arc<ContentStore>,
    pub usage: Arc<UsageLog>,
    /// When set, `/admin` routes require `Authorization: Bearer <token>`.
    pub admin_token: Option<Arc<str>>,
}

impl AppState {
    pub fn new(store: ContentStore, usage: UsageLog) -> Self {
        AppState {
            store: Arc::new(store),
            usage: Arc::new(usage),
            admin_token: None,
        }
    }

    pub fn with_admin_token(mut self, token: impl Into<Arc<str>>) -> Self {
        self.admin_token = Some(token.into());
        self
    }
}

pub struct ApiError(pub ServiceError);

impl From<ServiceError> for ApiError {
    fn from(e: ServiceError) -> Self {
        ApiError(e)
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        let (status, kind) = match &self.0 {
            ServiceError::NotFound(_) => (StatusCode::NOT_FOUND, "not_found"),
            ServiceError::InvalidRange { .. } => (StatusCode::BAD_REQUEST, "invalid_range"),
            ServiceError::BadRequest(_) | ServiceError::Core(_) => (StatusCode::BAD_REQUEST, "bad_request"),
            ServiceError::MalformedEvent(_) => (StatusCode::UNPROCESSABLE_ENTITY, "malformed_event"),
            ServiceError::IncompleteRun(_) => (StatusCode::CONFLICT, "incomplete_run"),
            ServiceError::Unauthorized => (StatusCode::UNAUTHORIZED, "unauthorized"),
            _ => (StatusCode::INTERNAL_SERVER_ERROR, "internal"),
        };
        if status.is_server_error() {
            tracing::error!(error = %self.0, "request failed");
        }
        (status, Json(json!({ "error": kind, "message": self.0.to_string() }))).into_response()
    }
}

type ApiResult<T> = Result<T, ApiError>;

pub fn router(state: AppState) -> Router {
    let admin = Router::new()
        .route("/admin/publish", post(publish))
        .route("/admin/rollback", post(rollback))
        .route_layer(middleware::from_fn_with_state(state.clone(), require_token));
    Router::new()
        .route("/courses", get(courses))
        .route("/courses/{id}/content", get(content))
        .route("/help", get(help_index))
        .route("/help/{topic}", get(help))
        .route("/usage/events", post(record_usage))
        .route("/usage/report", get(report))
        .merge(admin)
        .with_state(state)
}

async fn require_token(State(state): State<AppState>, req: Request, next: Next) -> Response {
    if let Some(token) = &state.admin_token {
        let presented = req
            .headers()
            .get(header::AUTHORIZATION)
            .and_then(|v| v.to_str().ok())
            .and_then(|v| v.strip_prefix("Bearer "));
        if presented != Some(token) {
            return ApiError(ServiceError::Unauthorized).into_response();
        }
    }
    next.run(req).await
}

#[derive(Serialize)]
struct CourseEntry {
    course_id: String,
    week_ranges: Vec<WeekRange>,
}

async fn courses(State(state): State<AppState>) -> Json<serde_json::Value> {
    let snap = state.store.snapshot();
    let courses: Vec<CourseEntry> = snap
        .courses()
        .into_iter()
        .map(|(course_id, ranges)| CourseEntry {
            course_id,
            week_ranges: ranges.into_iter().collect(),
        })
        .collect();
    Json(json!({ "generation": snap.id, "courses": courses }))
}

#[derive(Debug, Deserialize)]
pub struct ContentQuery {
    pub from_week: Option<u32>,
    pub to_week: Option<u32>,
    pub page: Option<String>,
    pub view: Option<String>,
}

async fn content(
    State(state): State<AppState>,
    Path(course_id): Path<String>,
    Query(q): Query<ContentQuery>,
) -> ApiResult<Response> {
    let (Some(from), Some(to)) = (q.from_week, q.to_week) else {
        return Err(ServiceError::BadRequest("from_week and to_week are required".into()).into());
    };
    let page: PageId = q
        .page
        .as_deref()
        .unwrap_or("summary")
        .parse()
        .map_err(|e: srl_dash_core::Error| ServiceError::BadRequest(e.to_string()))?;
    let view: View = q
        .view
        .as_deref()
        .unwrap_or("aggregated")
        .parse()
        .map_err(|e: srl_dash_core::Error| ServiceError::BadRequest(e.to_string()))?;
    let (generation, raw) = state.store.get_content(&course_id, from, to, page, view)?;
    let mut resp = Response::new(axum::body::Body::from(raw.as_bytes().to_vec()));
    let headers = resp.headers_mut();
    headers.insert(header::CONTENT_TYPE, HeaderValue::from_static("application/json"));
    headers.insert(GENERATION_HEADER, HeaderValue::from(generation));
    Ok(resp)
}

async fn help_index() -> Json<serde_json::Value> {
    let topics: Vec<&str> = TOPICS.iter().map(|t| t.topic).collect();
    Json(json!({ "topics": topics }))
}

async fn help(Path(topic): Path<String>) -> ApiResult<Response> {
    let t = get_help(&topic).ok_or_else(|| ServiceError::NotFound(format!("help topic {topic}")))?;
    Ok(Json(t).into_response())
}

#[derive(Deserialize)]
#[serde(untagged)]
enum UsageBatch {
    List(Vec<UsageEvent>),
    Wrapped { events: Vec<UsageEvent> },
}

async fn record_usage(State(state): State<AppState>, body: Bytes) -> ApiResult<Json<serde_json::Value>> {
    let batch: UsageBatch =
        serde_json::from_slice(&body).map_err(|e| ServiceError::MalformedEvent(e.to_string()))?;
    let events = match batch {
        UsageBatch::List(v) | UsageBatch::Wrapped { events: v } => v,
    };
    let log = state.usage.clone();
    let accepted = tokio::task::spawn_blocking(move || log.record(&events))
        .await
        .map_err(|e| ServiceError::Internal(e.to_string()))??;
    Ok(Json(json!({ "accepted": accepted })))
}

#[derive(Debug, Deserialize)]
pub struct ReportQuery {
    pub min_p: Option<f64>,
    pub self_loops: Option<bool>,
}

async fn report(State(state): State<AppState>, Query(q): Query<ReportQuery>) -> ApiResult<Response> {
    let events = state.usage.events();
    let r = usage_report(&events, q.min_p.unwrap_or(0.0), q.self_loops.unwrap_or(true))
        .map_err(|e| ServiceError::BadRequest(e.to_string()))?;
    Ok(Json(r).into_response())
}

async fn publish(State(state): State<AppState>, body: Bytes) -> ApiResult<Json<serde_json::Value>> {
    let bundles: Vec<ContentBundle> =
        serde_json::from_slice(&body).map_err(|e| ServiceError::BadRequest(format!("bundle list: {e}")))?;
    let store = state.store.clone();
    let generation = tokio::task::spawn_blocking(move || store.publish(&bundles))
        .await
        .map_err(|e| ServiceError::Internal(e.to_string()))??;
    tracing::info!(generation, "published");
    Ok(Json(json!({ "generation": generation })))
}

async fn rollback(State(state): State<AppState>) -> ApiResult<Json<serde_json::Value>> {
    let store = state.store.clone();
    let generation = tokio::task::spawn_blocking(move || store.rollback())
        .await
        .map_err(|e| ServiceError::Internal(e.to_string()))??;
    Ok(Json(json!({ "generation": generation })))
}

/// Serves `router(state)` until `shutdown` resolves.
pub async fn serve(
    listener: tokio::net::TcpListener,
    state: AppState,
    shutdown: impl std::future::Future<Output = ()> + Send + 'static,
) -> std::io::Result<()> {
    axum::serve(listener, router(state)).with_graceful_shutdown(shutdown).await
}
