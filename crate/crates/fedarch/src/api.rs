//! The `/v1` HTTP API.

use std::net::SocketAddr;
use std::sync::Arc;

use axum::body::Bytes;
use axum::extract::{Path, State};
use axum::http::{header, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use fedarch_core::catalog::{CaseStudyId, CatalogError};
use fedarch_core::engine::{self, EngineError, ProfileDelta, RequirementProfile};
use fedarch_core::validator::HypothesisFile;
use fedarch_core::{run_simulation, PatternCatalog, SimConfig, SimError};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::runs::{RunHandle, RunKind, RunRegistry, RunStatus};
use crate::validation::{subset, validate_parallel};

#[derive(Clone)]
pub struct AppState {
    pub catalog: Arc<PatternCatalog>,
    pub runs: Arc<RunRegistry>,
}

impl AppState {
    pub fn new(catalog: PatternCatalog) -> Self {
        AppState { catalog: Arc::new(catalog), runs: Arc::new(RunRegistry::new()) }
    }
}

/// Body of every error response.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ErrorBody {
    pub code: String,
    pub message: String,
    pub details: serde_json::Value,
}

#[derive(Debug)]
pub struct ApiError {
    status: StatusCode,
    body: ErrorBody,
}

impl ApiError {
    fn new(status: StatusCode, code: &str, message: impl Into<String>) -> Self {
        ApiError {
            status,
            body: ErrorBody { code: code.to_string(), message: message.into(), details: serde_json::Value::Null },
        }
    }

    fn with_details(mut self, details: serde_json::Value) -> Self {
        self.body.details = details;
        self
    }

    fn not_found(what: impl Into<String>) -> Self {
        ApiError::new(StatusCode::NOT_FOUND, "NotFound", what)
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        (self.status, Json(self.body)).into_response()
    }
}

impl From<EngineError> for ApiError {
    fn from(e: EngineError) -> Self {
        let status = match e {
            EngineError::NotFound(_) => StatusCode::NOT_FOUND,
            _ => StatusCode::BAD_REQUEST,
        };
        ApiError::new(status, e.code(), e.to_string())
    }
}

impl From<SimError> for ApiError {
    fn from(e: SimError) -> Self {
        let status = match e {
            SimError::Incompatible(_) => StatusCode::CONFLICT,
            _ => StatusCode::BAD_REQUEST,
        };
        ApiError::new(status, e.code(), e.to_string())
    }
}

fn parse<T: DeserializeOwned>(body: &Bytes) -> Result<T, ApiError> {
    serde_json::from_slice(body).map_err(|e| {
        ApiError::new(StatusCode::BAD_REQUEST, "InvalidRequest", "request body does not match the expected schema")
            .with_details(serde_json::json!({ "error": e.to_string(), "line": e.line(), "column": e.column() }))
    })
}

/// Serves pre-serialized JSON unchanged.
fn raw_json(text: String) -> Response {
    ([(header::CONTENT_TYPE, "application/json")], text).into_response()
}

pub fn router(state: AppState) -> Router {
    Router::new()
        .route("/v1/catalog", get(get_catalog))
        .route("/v1/patterns/{id}", get(get_pattern))
        .route("/v1/case-studies/{id}", get(get_case_study))
        .route("/v1/recommend", post(post_recommend))
        .route("/v1/whatif", post(post_whatif))
        .route("/v1/simulations", post(post_simulation))
        .route("/v1/simulations/{id}", get(get_simulation))
        .route("/v1/simulations/{id}/metrics", get(get_simulation_metrics))
        .route("/v1/validate", post(post_validate))
        .route("/v1/validations/{id}", get(get_validation))
        .route("/v1/validations/{id}/report", get(get_validation_report))
        .with_state(state)
}

/// Serves on `addr` until interrupted.
pub async fn serve(addr: SocketAddr, catalog: PatternCatalog) -> std::io::Result<()> {
    let listener = tokio::net::TcpListener::bind(addr).await?;
    eprintln!("listening on http://{}", listener.local_addr()?);
    axum::serve(listener, router(AppState::new(catalog)))
        .with_graceful_shutdown(async {
            let _ = tokio::signal::ctrl_c().await;
        })
        .await
}

async fn get_catalog(State(s): State<AppState>) -> Json<PatternCatalog> {
    Json((*s.catalog).clone())
}

async fn get_pattern(State(s): State<AppState>, Path(id): Path<String>) -> Result<Response, ApiError> {
    match s.catalog.query_pattern(&id) {
        Ok(view) => Ok(Json(view).into_response()),
        Err(CatalogError::NotFound(m)) => Err(ApiError::not_found(m)),
        Err(e) => Err(ApiError::new(StatusCode::BAD_REQUEST, "CatalogError", e.to_string())),
    }
}

async fn get_case_study(State(s): State<AppState>, Path(id): Path<String>) -> Result<Response, ApiError> {
    let id: CaseStudyId = id.parse().map_err(|e: CatalogError| ApiError::not_found(e.to_string()))?;
    Ok(Json(engine::check_case_study(&s.catalog, id)?).into_response())
}

async fn post_recommend(State(s): State<AppState>, body: Bytes) -> Result<Response, ApiError> {
    let profile: RequirementProfile = parse(&body)?;
    Ok(Json(engine::recommend(&s.catalog, &profile)?).into_response())
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WhatIfRequest {
    #[serde(default)]
    pub profile: RequirementProfile,
    #[serde(default)]
    pub delta: ProfileDelta,
}

async fn post_whatif(State(s): State<AppState>, body: Bytes) -> Result<Response, ApiError> {
    let req: WhatIfRequest = parse(&body)?;
    Ok(Json(engine::what_if(&s.catalog, &req.profile, &req.delta)?).into_response())
}

async fn post_simulation(State(s): State<AppState>, body: Bytes) -> Result<Response, ApiError> {
    let config: SimConfig = parse(&body)?;
    config.validate()?;
    let handle = s.runs.create(RunKind::Simulation);
    let runs = s.runs.clone();
    let id = handle.run_id.clone();
    tokio::task::spawn_blocking(move || {
        runs.start(&id);
        match run_simulation(&config) {
            Ok(metrics) => runs.finish(&id, serde_json::to_string(&metrics).expect("metrics serialize")),
            Err(e) => runs.fail(&id, e.code(), e.to_string()),
        }
    });
    Ok((StatusCode::ACCEPTED, Json(handle)).into_response())
}

fn lookup(s: &AppState, id: &str, kind: RunKind) -> Result<RunHandle, ApiError> {
    s.runs.get(id).filter(|h| h.kind == kind).ok_or_else(|| ApiError::not_found(format!("run `{id}`")))
}

fn raw_result(s: &AppState, id: &str, kind: RunKind) -> Result<Response, ApiError> {
    let handle = lookup(s, id, kind)?;
    match (handle.status, s.runs.raw_result(id).flatten()) {
        (RunStatus::Done, Some(raw)) => Ok(raw_json(raw)),
        (RunStatus::Failed, _) => {
            let err = handle.error.unwrap_or_else(|| crate::runs::RunError { code: "failed".into(), message: String::new() });
            Err(ApiError::new(StatusCode::CONFLICT, &err.code, err.message))
        }
        (status, _) => Err(ApiError::new(StatusCode::CONFLICT, "RunNotFinished", format!("run `{id}` is {status:?}"))
            .with_details(serde_json::json!({ "status": status }))),
    }
}

async fn get_simulation(State(s): State<AppState>, Path(id): Path<String>) -> Result<Json<RunHandle>, ApiError> {
    lookup(&s, &id, RunKind::Simulation).map(Json)
}

async fn get_simulation_metrics(State(s): State<AppState>, Path(id): Path<String>) -> Result<Response, ApiError> {
    raw_result(&s, &id, RunKind::Simulation)
}

/// Which hypotheses to run; defaults to the whole bundled suite.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ValidateRequest {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub hypotheses: Option<HypothesisFile>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ids: Option<Vec<String>>,
}

async fn post_validate(State(s): State<AppState>, body: Bytes) -> Result<Response, ApiError> {
    let req: ValidateRequest = if body.is_empty() { ValidateRequest::default() } else { parse(&body)? };
    let file = req.hypotheses.unwrap_or_else(HypothesisFile::canonical);
    let file = subset(&file, req.ids.as_deref()).map_err(ApiError::not_found)?;
    for h in &file.hypotheses {
        h.check(&s.catalog).map_err(|e| ApiError::new(StatusCode::BAD_REQUEST, e.code(), e.to_string()))?;
        h.scenario.validate()?;
    }
    let handle = s.runs.create(RunKind::Validation);
    let (runs, catalog, id) = (s.runs.clone(), s.catalog.clone(), handle.run_id.clone());
    tokio::task::spawn_blocking(move || {
        runs.start(&id);
        let report = validate_parallel(&catalog, &file);
        runs.finish(&id, serde_json::to_string(&report).expect("report serializes"));
    });
    Ok((StatusCode::ACCEPTED, Json(handle)).into_response())
}

async fn get_validation(State(s): State<AppState>, Path(id): Path<String>) -> Result<Json<RunHandle>, ApiError> {
    lookup(&s, &id, RunKind::Validation).map(Json)
}

async fn get_validation_report(State(s): State<AppState>, Path(id): Path<String>) -> Result<Response, ApiError> {
    raw_result(&s, &id, RunKind::Validation)
}
