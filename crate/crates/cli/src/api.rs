//! JSON API under `/api`, plus the workbench's static assets when a
//! directory is configured.

use std::sync::Arc;

use axum::extract::rejection::JsonRejection;
use axum::extract::{Path, Query, State};
use axum::http::{HeaderValue, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use chrono::NaiveDate;
use serde::Deserialize;
use serde_json::{json, Value};

use oda_core::report::ReportFormat;
use oda_core::store::{PortalProfile, Region, Store, StoreError};
use oda_core::{Verdict, VerdictSource, VerdictValue};
use oda_probe::Prober;

use crate::config::RunConfig;
use crate::ops::{self, OpError, ProbeDocuments};

pub const API_VERSION: &str = "1";
pub const VERSION_HEADER: &str = "x-oda-api-version";

pub struct AppState {
    pub store: Store,
    pub prober: Prober,
    pub config: RunConfig,
}

#[derive(Debug)]
pub struct ApiError {
    status: StatusCode,
    message: String,
}

impl ApiError {
    fn bad_request(message: impl Into<String>) -> Self {
        ApiError { status: StatusCode::BAD_REQUEST, message: message.into() }
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        (self.status, Json(json!({"error": self.message}))).into_response()
    }
}

impl From<OpError> for ApiError {
    fn from(e: OpError) -> Self {
        let status = match &e {
            OpError::Store(s) => match s {
                StoreError::UnknownPortal(_) | StoreError::UnknownAssessment(_) => StatusCode::NOT_FOUND,
                StoreError::Finalized
                | StoreError::DuplicatePortal(_)
                | StoreError::DuplicateAssessment(_)
                | StoreError::OpenAssessmentExists { .. }
                | StoreError::Incomplete(_) => StatusCode::CONFLICT,
                StoreError::Io { .. } | StoreError::Corrupt { .. } | StoreError::Framework { .. } => {
                    StatusCode::INTERNAL_SERVER_ERROR
                }
                _ => StatusCode::BAD_REQUEST,
            },
            OpError::NoAssessments(_) => StatusCode::NOT_FOUND,
            OpError::Report(_) | OpError::UnknownReport(_) | OpError::MissingTarget => StatusCode::BAD_REQUEST,
        };
        ApiError { status, message: e.to_string() }
    }
}

impl From<StoreError> for ApiError {
    fn from(e: StoreError) -> Self {
        OpError::from(e).into()
    }
}

impl From<JsonRejection> for ApiError {
    fn from(e: JsonRejection) -> Self {
        ApiError::bad_request(e.body_text())
    }
}

type ApiResult = Result<Response, ApiError>;

fn ok<T: serde::Serialize>(v: T) -> ApiResult {
    Ok(Json(v).into_response())
}

fn created<T: serde::Serialize>(v: T) -> ApiResult {
    Ok((StatusCode::CREATED, Json(v)).into_response())
}

pub fn router(state: Arc<AppState>) -> Router {
    let api = Router::new()
        .route("/api/framework", get(framework))
        .route("/api/portals", get(list_portals).post(add_portal))
        .route("/api/assessments", get(list_assessments).post(create_assessment))
        .route("/api/assessments/{id}", get(show_assessment))
        .route("/api/assessments/{id}/verdicts", post(post_verdict))
        .route("/api/assessments/{id}/score", get(assessment_score))
        .route("/api/assessments/{id}/probe", post(probe))
        .route("/api/assessments/{id}/finalize", post(finalize))
        .route("/api/reports/ranking", get(ranking))
        .route("/api/{*rest}", get(not_found).post(not_found));
    let app = match &state.config.assets {
        Some(dir) => api.fallback_service(tower_http::services::ServeDir::new(dir)),
        None => api.fallback(not_found),
    };
    app.layer(axum::middleware::map_response(add_version)).with_state(state)
}

async fn add_version(mut res: Response) -> Response {
    res.headers_mut().insert(VERSION_HEADER, HeaderValue::from_static(API_VERSION));
    res
}

async fn not_found() -> ApiError {
    ApiError { status: StatusCode::NOT_FOUND, message: "no such endpoint".into() }
}

#[derive(Deserialize)]
struct VersionQuery {
    version: Option<String>,
}

async fn framework(State(st): State<Arc<AppState>>, Query(q): Query<VersionQuery>) -> ApiResult {
    let spec = match &q.version {
        Some(v) => st.store.framework(v)?,
        None => st.store.default_framework(),
    };
    let mut doc = serde_json::to_value(spec).expect("framework serializes");
    doc["max_total"] = json!(spec.max_total());
    doc["dimension_maxima"] = json!(spec.dimension_maxima());
    ok(doc)
}

#[derive(Deserialize)]
struct RegionQuery {
    region: Option<String>,
}

async fn list_portals(State(st): State<Arc<AppState>>, Query(q): Query<RegionQuery>) -> ApiResult {
    let region = match q.region.as_deref() {
        Some(r) => Some(Region::parse(r).ok_or_else(|| ApiError::bad_request(format!("unknown region {r}")))?),
        None => None,
    };
    ok(st.store.list_portals(region)?)
}

async fn add_portal(State(st): State<Arc<AppState>>, body: Result<Json<PortalProfile>, JsonRejection>) -> ApiResult {
    let Json(p) = body?;
    st.store.add_portal(&p)?;
    created(p)
}

#[derive(Deserialize)]
struct PortalQuery {
    portal: Option<String>,
}

async fn list_assessments(State(st): State<Arc<AppState>>, Query(q): Query<PortalQuery>) -> ApiResult {
    let all = match &q.portal {
        Some(p) => st.store.assessments_for(p)?,
        None => st.store.list_assessments()?,
    };
    let summary: Vec<Value> = all
        .iter()
        .map(|a| {
            json!({
                "assessment_id": a.assessment_id,
                "portal_id": a.portal_id,
                "framework_version": a.framework_version,
                "status": a.status,
                "updated_at": a.updated_at,
            })
        })
        .collect();
    ok(summary)
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct NewAssessment {
    portal_id: String,
    framework_version: Option<String>,
    reference_date: Option<NaiveDate>,
}

async fn create_assessment(
    State(st): State<Arc<AppState>>,
    body: Result<Json<NewAssessment>, JsonRejection>,
) -> ApiResult {
    let Json(req) = body?;
    let now = st.config.now();
    let version = req.framework_version.unwrap_or_else(|| st.store.default_framework().version.clone());
    let mut a = st.store.create_assessment(&req.portal_id, &version, now)?;
    if let Some(d) = req.reference_date {
        a = st
            .store
            .update_assessment(&a.assessment_id, now, |a, _| {
                a.reference_date = d;
                Ok(())
            })?
            .0;
    }
    created(a)
}

async fn show_assessment(State(st): State<Arc<AppState>>, Path(id): Path<String>) -> ApiResult {
    let a = st.store.assessment(&id)?;
    let view = ops::view(&st.store, &a)?;
    ok(json!({
        "assessment": a,
        "effective_verdicts": view.effective_verdicts,
        "score": view.score,
        "recorded": view.recorded,
        "missing": view.missing,
    }))
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct VerdictBody {
    #[serde(alias = "sub_dimension_id")]
    id: String,
    value: Value,
    #[serde(default)]
    source: Option<String>,
    #[serde(default)]
    note: Option<String>,
    #[serde(default)]
    evidence_refs: Vec<String>,
}

fn verdict_value(v: &Value) -> Option<VerdictValue> {
    match v {
        Value::Bool(b) => Some(VerdictValue::new(*b)),
        Value::Number(n) => n.as_i64().and_then(VerdictValue::from_int),
        _ => None,
    }
}

fn verdict_source(s: Option<&str>) -> Result<VerdictSource, ApiError> {
    match s.unwrap_or("manual") {
        "manual" => Ok(VerdictSource::Manual),
        "override" => Ok(VerdictSource::Override),
        "auto" => Ok(VerdictSource::Auto),
        other => Err(ApiError::bad_request(format!("unknown verdict source {other}"))),
    }
}

async fn post_verdict(
    State(st): State<Arc<AppState>>,
    Path(id): Path<String>,
    body: Result<Json<VerdictBody>, JsonRejection>,
) -> ApiResult {
    let Json(b) = body?;
    let value = verdict_value(&b.value).ok_or_else(|| ApiError::bad_request("verdict value must be 0 or 1"))?;
    let source = verdict_source(b.source.as_deref())?;
    let now = st.config.now();
    let mut v = Verdict::new(b.id, value, source, now);
    v.note = b.note.filter(|n| !n.is_empty());
    v.evidence_refs = b.evidence_refs;
    let a = st.store.record_verdict(&id, v, now)?;
    let view = ops::view(&st.store, &a)?;
    ok(json!({"effective_verdicts": view.effective_verdicts, "score": view.score, "recorded": view.recorded, "missing": view.missing}))
}

async fn assessment_score(State(st): State<Arc<AppState>>, Path(id): Path<String>) -> ApiResult {
    let a = st.store.assessment(&id)?;
    ok(ops::score(&st.store, &a)?)
}

#[derive(Deserialize, Default)]
#[serde(deny_unknown_fields)]
struct ProbeBody {
    /// Manual-import catalog: an array of dataset records.
    catalog: Option<Value>,
    accessibility_report: Option<Value>,
}

async fn probe(State(st): State<Arc<AppState>>, Path(id): Path<String>, body: Option<Json<ProbeBody>>) -> ApiResult {
    let b = body.map(|Json(b)| b).unwrap_or_default();
    let a = st.store.assessment(&id)?;
    let docs = ProbeDocuments {
        catalog: b.catalog.map(|v| v.to_string()),
        accessibility: b.accessibility_report.map(|v| v.to_string()),
    };
    let (a, report) = ops::probe_into(&st.store, &st.prober, &a, &docs, st.config.now()).await?;
    let view = ops::view(&st.store, &a)?;
    ok(json!({
        "probes": report.probes,
        "auto_filled": report.auto_filled,
        "needs_review": report.needs_review,
        "warnings": report.warnings,
        "evidence_ids": report.evidence.iter().map(|e| &e.evidence_id).collect::<Vec<_>>(),
        "effective_verdicts": view.effective_verdicts,
        "score": view.score,
    }))
}

async fn finalize(State(st): State<Arc<AppState>>, Path(id): Path<String>) -> ApiResult {
    let a = st.store.finalize(&id, st.config.now())?;
    let view = ops::view(&st.store, &a)?;
    ok(view)
}

#[derive(Deserialize)]
struct RankingQuery {
    format: Option<String>,
    version: Option<String>,
}

async fn ranking(State(st): State<Arc<AppState>>, Query(q): Query<RankingQuery>) -> ApiResult {
    let spec = match &q.version {
        Some(v) => st.store.framework(v)?,
        None => st.store.default_framework(),
    };
    let report = ops::ranking(&st.store, spec, st.config.thresholds, st.config.now())?;
    match q.format.as_deref().map(|f| ReportFormat::parse(f).ok_or(f)) {
        None | Some(Ok(ReportFormat::Json)) => ok(report),
        Some(Ok(fmt)) => {
            let ct = if fmt == ReportFormat::Csv { "text/csv; charset=utf-8" } else { "text/markdown; charset=utf-8" };
            Ok(([(axum::http::header::CONTENT_TYPE, ct)], report.render(fmt)).into_response())
        }
        Some(Err(f)) => Err(ApiError::bad_request(format!("unknown format {f}"))),
    }
}

/// Serves on an already bound listener until the process ends.
pub async fn serve(state: Arc<AppState>, listener: tokio::net::TcpListener) -> std::io::Result<()> {
    axum::serve(listener, router(state)).await
}
