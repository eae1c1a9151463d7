//! HTTP routes.

use std::collections::BTreeSet;

use axum::body::Bytes;
use axum::extract::rejection::JsonRejection;
use axum::extract::{DefaultBodyLimit, Path, Query, State};
use axum::http::{header, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use chrono::Utc;
use helpdesk_core::analytics::{analyze, AnalysisInputs, AnalysisOptions, AnalyticsError, DedupConfig, Exclusions, Report};
use helpdesk_core::backend::CompletionParams;
use helpdesk_core::model::{format_timestamp, validate_request, ClassContext, RawRequest, ValidationError};
use helpdesk_core::pipeline::respond;
use helpdesk_core::store::{
    import_exercises, parse_performance, save_class, write_performance, QueryLogRecord, StoreError,
};
use helpdesk_core::{Category, QueryLabel};
use serde::{Deserialize, Serialize};

use crate::auth::Principal;
use crate::error::ApiError;
use crate::state::{AppState, CLASS_FILE, EXERCISES_DIR, PERFORMANCE_FILE};

pub const DEFAULT_PER_PAGE: usize = 50;
pub const MAX_PER_PAGE: usize = 500;
/// Bulk uploads (log import, performance CSV).
const BULK_BODY_LIMIT: usize = 256 * 1024 * 1024;

pub fn router(state: AppState) -> Router {
    // Four fields at the limit plus JSON overhead fit; anything larger is
    // rejected before parsing.
    let submit_limit = state.limits.max_field_bytes.saturating_mul(4).saturating_add(64 * 1024);
    Router::new()
        .route("/api/health", get(health))
        .route("/api/whoami", get(whoami))
        .route(
            "/api/queries",
            post(submit_query)
                .layer(DefaultBodyLimit::max(submit_limit))
                .get(list_queries),
        )
        .route("/api/queries/{id}", get(get_query))
        .route("/api/export", get(export_log))
        .route("/api/import", post(import_log).layer(DefaultBodyLimit::max(BULK_BODY_LIMIT)))
        .route("/api/labels", post(put_label).get(list_labels))
        .route("/api/analytics/report", get(report))
        .route("/api/classes/{id}/config", get(get_class).post(update_class))
        .route(
            "/api/performance",
            post(upload_performance)
                .get(get_performance)
                .layer(DefaultBodyLimit::max(BULK_BODY_LIMIT)),
        )
        .with_state(state)
}

async fn health() -> Json<serde_json::Value> {
    Json(serde_json::json!({ "status": "ok" }))
}

async fn whoami(p: Principal) -> Json<Principal> {
    Json(p)
}

fn store_error(e: StoreError) -> ApiError {
    tracing::error!(error = %e, "store failure");
    ApiError::internal(e.to_string())
}

#[derive(Debug, Default, Deserialize)]
pub struct SubmitBody {
    #[serde(default)]
    pub language: String,
    #[serde(default)]
    pub code: String,
    #[serde(default)]
    pub error: String,
    #[serde(default)]
    pub issue: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SubmitResponse {
    pub query_id: String,
    pub main_text: String,
    pub clarification_text: Option<String>,
    pub code_was_removed: bool,
}

async fn submit_query(
    State(state): State<AppState>,
    p: Principal,
    body: Result<Json<SubmitBody>, JsonRejection>,
) -> Result<Json<SubmitResponse>, ApiError> {
    let Json(body) = body?;
    let raw = RawRequest {
        user_id: p.user_id,
        timestamp: format_timestamp(&Utc::now()),
        language: body.language,
        code: body.code,
        error: body.error,
        issue: body.issue,
    };
    let req = validate_request(raw, state.limits, state.ids.as_ref()).map_err(|e| match e {
        ValidationError::Oversized { .. } => {
            ApiError::new(StatusCode::PAYLOAD_TOO_LARGE, "payload_too_large", e.to_string())
        }
        other => ApiError::bad_request(other.to_string()),
    })?;
    let ctx = state.class();
    match respond(&req, &ctx, &state.backends).await {
        Ok(resp) => {
            state
                .log
                .append(QueryLogRecord::answered(&req, &resp))
                .map_err(store_error)?;
            Ok(Json(SubmitResponse {
                query_id: req.id,
                main_text: resp.main_text,
                clarification_text: resp.clarification_text,
                code_was_removed: resp.code_was_removed,
            }))
        }
        Err(e) => {
            let message = e.to_string();
            tracing::warn!(query = %req.id, error = %message, "completion failed");
            state
                .log
                .append(QueryLogRecord::failed(&req, message.clone()))
                .map_err(store_error)?;
            Err(ApiError::new(StatusCode::BAD_GATEWAY, "backend_unavailable", message).with_query(req.id))
        }
    }
}

/// What a principal may see of a record: students never see prompts or
/// raw completions.
fn visible(p: &Principal, mut r: QueryLogRecord) -> QueryLogRecord {
    if !p.is_instructor() {
        r.trace.clear();
    }
    r
}

#[derive(Debug, Default, Deserialize)]
pub struct ListParams {
    pub user: Option<String>,
    pub page: Option<usize>,
    pub per_page: Option<usize>,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct QueryPage {
    pub records: Vec<QueryLogRecord>,
    pub page: usize,
    pub per_page: usize,
    pub total: usize,
}

async fn list_queries(
    State(state): State<AppState>,
    p: Principal,
    Query(params): Query<ListParams>,
) -> Result<Json<QueryPage>, ApiError> {
    let user = match params.user {
        Some(u) if !p.can_read(&u) => {
            return Err(ApiError::forbidden("students may only read their own queries"))
        }
        Some(u) => Some(u),
        None if p.is_instructor() => None,
        None => Some(p.user_id.clone()),
    };
    let page = params.page.unwrap_or(1).max(1);
    let per_page = params.per_page.unwrap_or(DEFAULT_PER_PAGE).clamp(1, MAX_PER_PAGE);
    let all = state
        .log
        .select(|r| user.as_deref().is_none_or(|u| r.user_id == u));
    let total = all.len();
    let records = all
        .into_iter()
        .skip((page - 1).saturating_mul(per_page))
        .take(per_page)
        .map(|r| visible(&p, r))
        .collect();
    Ok(Json(QueryPage {
        records,
        page,
        per_page,
        total,
    }))
}

async fn get_query(
    State(state): State<AppState>,
    p: Principal,
    Path(id): Path<String>,
) -> Result<Json<QueryLogRecord>, ApiError> {
    // Someone else's id answers exactly like a missing one.
    match state.log.get(&id) {
        Some(r) if p.can_read(&r.user_id) => Ok(Json(visible(&p, r))),
        _ => Err(ApiError::not_found(format!("no query {id}"))),
    }
}

async fn export_log(State(state): State<AppState>, p: Principal) -> Result<Response, ApiError> {
    p.require_instructor()?;
    let mut buf = Vec::new();
    state
        .log
        .export_log(&mut buf)
        .map_err(|e| ApiError::internal(e.to_string()))?;
    Ok(([(header::CONTENT_TYPE, "application/x-ndjson")], buf).into_response())
}

#[derive(Debug, Serialize, Deserialize)]
pub struct ImportResult {
    pub imported: usize,
}

async fn import_log(
    State(state): State<AppState>,
    p: Principal,
    body: Bytes,
) -> Result<Json<ImportResult>, ApiError> {
    p.require_instructor()?;
    match state.log.import_log(&body[..]) {
        Ok(imported) => Ok(Json(ImportResult { imported })),
        Err(e @ (StoreError::Malformed { .. } | StoreError::DuplicateId(_) | StoreError::OutOfOrder { .. })) => {
            Err(ApiError::bad_request(e.to_string()))
        }
        Err(e) => Err(store_error(e)),
    }
}

#[derive(Debug, Deserialize)]
pub struct LabelBody {
    pub query_id: String,
    pub category: String,
    /// Defaults to the caller.
    #[serde(default)]
    pub rater_id: Option<String>,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct LabelResult {
    pub label: QueryLabel,
    pub replaced: Option<Category>,
}

async fn put_label(
    State(state): State<AppState>,
    p: Principal,
    body: Result<Json<LabelBody>, JsonRejection>,
) -> Result<Json<LabelResult>, ApiError> {
    p.require_instructor()?;
    let Json(body) = body?;
    let category: Category = body
        .category
        .parse()
        .map_err(|e: helpdesk_core::analytics::UnknownCategory| ApiError::bad_request(e.to_string()))?;
    if !state.log.contains(&body.query_id) {
        return Err(ApiError::not_found(format!("no query {}", body.query_id)));
    }
    let label = QueryLabel {
        query_id: body.query_id,
        rater_id: body.rater_id.unwrap_or(p.user_id),
        category,
    };
    let out = state.labels.upsert(label, Utc::now()).map_err(store_error)?;
    Ok(Json(LabelResult {
        label: out.label,
        replaced: out.replaced,
    }))
}

async fn list_labels(State(state): State<AppState>, p: Principal) -> Result<Json<Vec<QueryLabel>>, ApiError> {
    p.require_instructor()?;
    Ok(Json(state.labels.current()))
}

#[derive(Debug, Default, Deserialize)]
pub struct ReportParams {
    pub dedup_k: Option<f64>,
    pub gap_seconds: Option<i64>,
    /// Comma-separated user ids.
    pub exclude: Option<String>,
    #[serde(default)]
    pub outlier_rule: bool,
}

impl ReportParams {
    pub fn options(&self) -> Result<AnalysisOptions, AnalyticsError> {
        let mut opts = AnalysisOptions::default();
        if let Some(k) = self.dedup_k {
            opts.dedup = DedupConfig::new(k)?;
        }
        if let Some(g) = self.gap_seconds {
            opts.gap_seconds = g;
        }
        let users: BTreeSet<String> = self
            .exclude
            .iter()
            .flat_map(|s| s.split(','))
            .map(str::trim)
            .filter(|s| !s.is_empty())
            .map(str::to_owned)
            .collect();
        opts.exclusions = Exclusions {
            users,
            outlier_rule: self.outlier_rule,
        };
        Ok(opts)
    }
}

fn analytics_error(e: AnalyticsError) -> ApiError {
    match e {
        AnalyticsError::InvalidParameter(m) => ApiError::bad_request(m),
        other => ApiError::new(StatusCode::CONFLICT, "analysis_undefined", other.to_string()),
    }
}

async fn report(
    State(state): State<AppState>,
    p: Principal,
    Query(params): Query<ReportParams>,
) -> Result<Json<Report>, ApiError> {
    p.require_instructor()?;
    let opts = params.options().map_err(analytics_error)?;
    let queries: Vec<_> = state.log.load_all().iter().map(QueryLogRecord::request).collect();
    let labels = state.labels.current();
    let ex_dir = state.data_dir.join(EXERCISES_DIR);
    let exercises = if ex_dir.is_dir() {
        let load = import_exercises(&ex_dir).map_err(store_error)?;
        for f in &load.failures {
            tracing::warn!(path = %f.path.display(), reason = %f.reason, "skipped exercise");
        }
        Some(load.exercises)
    } else {
        None
    };
    let performance = state.performance.read().expect("performance lock poisoned").clone();
    // CPU-bound on large logs; keep it off the async workers.
    let report = tokio::task::spawn_blocking(move || {
        let inputs = AnalysisInputs {
            queries: &queries,
            exercises: exercises.as_deref(),
            labels: (!labels.is_empty()).then_some(&labels[..]),
            performance: performance.as_deref(),
        };
        analyze(inputs, &opts)
    })
    .await
    .map_err(|e| ApiError::internal(e.to_string()))?
    .map_err(analytics_error)?;
    Ok(Json(report))
}

fn check_class_id(state: &AppState, id: &str) -> Result<ClassContext, ApiError> {
    let ctx = state.class();
    if ctx.class_id != id {
        return Err(ApiError::not_found(format!("no class {id}")));
    }
    Ok(ctx)
}

async fn get_class(
    State(state): State<AppState>,
    p: Principal,
    Path(id): Path<String>,
) -> Result<Json<ClassContext>, ApiError> {
    p.require_instructor()?;
    check_class_id(&state, &id).map(Json)
}

/// Partial update; omitted fields keep their current value.
#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ClassUpdate {
    pub name: Option<String>,
    pub avoid_set: Option<Vec<String>>,
    pub backend_params: Option<CompletionParams>,
}

async fn update_class(
    State(state): State<AppState>,
    p: Principal,
    Path(id): Path<String>,
    body: Result<Json<ClassUpdate>, JsonRejection>,
) -> Result<Json<ClassContext>, ApiError> {
    p.require_instructor()?;
    let Json(update) = body?;
    let mut guard = state.class.write().expect("class lock poisoned");
    if guard.class_id != id {
        return Err(ApiError::not_found(format!("no class {id}")));
    }
    let mut next = guard.clone();
    if let Some(n) = update.name {
        next.name = n;
    }
    if let Some(a) = update.avoid_set {
        next.avoid_set = a;
    }
    if let Some(b) = update.backend_params {
        next.backend_params = b;
    }
    next.validate().map_err(|e| ApiError::bad_request(e.to_string()))?;
    save_class(&state.data_dir.join(CLASS_FILE), &next).map_err(store_error)?;
    *guard = next.clone();
    Ok(Json(next))
}

#[derive(Debug, Serialize, Deserialize)]
pub struct PerformanceResult {
    pub records: usize,
    pub users: usize,
    pub activities: usize,
}

async fn upload_performance(
    State(state): State<AppState>,
    p: Principal,
    body: Bytes,
) -> Result<Json<PerformanceResult>, ApiError> {
    p.require_instructor()?;
    let records = parse_performance(&body[..]).map_err(|e| ApiError::bad_request(e.to_string()))?;
    let path = state.data_dir.join(PERFORMANCE_FILE);
    let tmp = path.with_extension("csv.tmp");
    let write = || -> Result<(), String> {
        let file = std::fs::File::create(&tmp).map_err(|e| e.to_string())?;
        write_performance(file, &records).map_err(|e| e.to_string())?;
        std::fs::rename(&tmp, &path).map_err(|e| e.to_string())
    };
    write().map_err(ApiError::internal)?;
    let users: BTreeSet<&str> = records.iter().map(|r| r.user_id.as_str()).collect();
    let activities: BTreeSet<&str> = records.iter().map(|r| r.activity_id.as_str()).collect();
    let result = PerformanceResult {
        records: records.len(),
        users: users.len(),
        activities: activities.len(),
    };
    *state.performance.write().expect("performance lock poisoned") = Some(records);
    Ok(Json(result))
}

async fn get_performance(State(state): State<AppState>, p: Principal) -> Result<Response, ApiError> {
    p.require_instructor()?;
    let records = state.performance.read().expect("performance lock poisoned").clone();
    let Some(records) = records else {
        return Err(ApiError::not_found("no performance data uploaded"));
    };
    let mut buf = Vec::new();
    write_performance(&mut buf, &records).map_err(|e| ApiError::internal(e.to_string()))?;
    Ok(([(header::CONTENT_TYPE, "text/csv")], buf).into_response())
}
