//! JSON request/response service exposing the two tool functions a
//! function-calling agent needs: the POI tag catalog and the route search.
//!
//! Two transports share one handler layer: HTTP (`POST /katr/search`,
//! `GET /poi/tags`, `GET /health`) and line-delimited JSON on stdio.
//! Responses are a pure function of (loaded indexes, request) apart from the
//! timing field.

pub mod stdio;

use std::sync::Arc;
use std::time::{Duration, Instant};

use axum::extract::rejection::JsonRejection;
use axum::extract::State;
use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use serde::{Deserialize, Serialize};
use serde_json::json;

use katr_core::dataset::{Dataset, RouteJson};
use katr_core::engine::{katr_query, EngineOptions, PruneCounters, Query};
use katr_core::poi::TagEntry;
use katr_core::{KatrError, KeywordId};

pub const SCHEMA_VERSION: &str = "1";

pub struct ServiceState {
    pub dataset: Dataset,
    pub timeout: Duration,
}

impl ServiceState {
    pub fn new(dataset: Dataset, timeout: Duration) -> Arc<ServiceState> {
        Arc::new(ServiceState { dataset, timeout })
    }
}

/// A keyword given either as a catalog tag or a raw id.
#[derive(Debug, Clone, Deserialize)]
#[serde(untagged)]
pub enum KeywordSpec {
    Id(KeywordId),
    Tag(String),
}

#[derive(Debug, Clone, Deserialize)]
pub struct QueryRequest {
    /// Vertex id in the network's original id space.
    pub source: u64,
    pub keywords: Vec<KeywordSpec>,
    #[serde(default = "default_k")]
    pub k: usize,
    #[serde(default = "default_alpha")]
    pub alpha: f64,
    #[serde(default)]
    pub fixed_order: bool,
    /// Raw distance units.
    #[serde(default)]
    pub budget: Option<f64>,
    #[serde(default)]
    pub destination: Option<u64>,
}

fn default_k() -> usize {
    1
}

fn default_alpha() -> f64 {
    0.5
}

#[derive(Debug, Serialize)]
pub struct SearchResponse {
    pub schema_version: &'static str,
    pub source: u64,
    pub keywords: Vec<ResolvedKeyword>,
    pub routes: Vec<RouteJson>,
    pub counters: PruneCounters,
    pub partial: bool,
    pub infeasible_budget: bool,
    pub timing_ms: f64,
}

#[derive(Debug, Serialize)]
pub struct ResolvedKeyword {
    pub keyword_id: KeywordId,
    pub tag: String,
}

#[derive(Debug, Serialize)]
pub struct TagsResponse {
    pub schema_version: &'static str,
    pub tags: Vec<TagEntry>,
}

/// Structured error payload; `code` is stable for programmatic handling.
#[derive(Debug)]
pub struct ServiceError {
    pub status: StatusCode,
    pub body: serde_json::Value,
}

impl ServiceError {
    fn new(status: StatusCode, code: &str, message: String) -> ServiceError {
        ServiceError {
            status,
            body: json!({
                "schema_version": SCHEMA_VERSION,
                "error": { "code": code, "message": message },
            }),
        }
    }

    fn with_detail(mut self, key: &str, value: serde_json::Value) -> ServiceError {
        self.body["error"][key] = value;
        self
    }
}

impl IntoResponse for ServiceError {
    fn into_response(self) -> Response {
        (self.status, Json(self.body)).into_response()
    }
}

pub fn router(state: Arc<ServiceState>) -> Router {
    Router::new()
        .route("/katr/search", post(handle_katr_search))
        .route("/poi/tags", get(handle_list_poi_tags))
        .route("/health", get(handle_health))
        .with_state(state)
}

async fn handle_health() -> Json<serde_json::Value> {
    Json(json!({ "schema_version": SCHEMA_VERSION, "status": "ok" }))
}

async fn handle_list_poi_tags(State(state): State<Arc<ServiceState>>) -> Json<TagsResponse> {
    Json(tags_response(&state))
}

pub fn tags_response(state: &ServiceState) -> TagsResponse {
    TagsResponse {
        schema_version: SCHEMA_VERSION,
        tags: state.dataset.poi.catalog(),
    }
}

async fn handle_katr_search(
    State(state): State<Arc<ServiceState>>,
    payload: Result<Json<QueryRequest>, JsonRejection>,
) -> Result<Json<SearchResponse>, ServiceError> {
    let Json(req) = payload.map_err(|rej| {
        ServiceError::new(
            StatusCode::BAD_REQUEST,
            "malformed_request",
            rej.body_text(),
        )
    })?;
    // The engine is synchronous and CPU-bound; keep the async workers free.
    let state2 = Arc::clone(&state);
    tokio::task::spawn_blocking(move || search(&state2, &req))
        .await
        .map_err(|e| {
            ServiceError::new(
                StatusCode::INTERNAL_SERVER_ERROR,
                "internal",
                e.to_string(),
            )
        })?
        .map(Json)
}

/// Transport-independent search: validates the request against the catalog,
/// runs the engine with the configured deadline, and renders the payload.
pub fn search(state: &ServiceState, req: &QueryRequest) -> Result<SearchResponse, ServiceError> {
    let started = Instant::now();
    let ds = &state.dataset;
    let mut keywords = Vec::with_capacity(req.keywords.len());
    let mut resolved = Vec::with_capacity(req.keywords.len());
    for spec in &req.keywords {
        let id = match spec {
            KeywordSpec::Id(id) => {
                if !ds.poi.has_keyword(*id) {
                    return Err(unknown_keyword(ds, &id.to_string()));
                }
                *id
            }
            KeywordSpec::Tag(tag) => ds
                .poi
                .keyword_by_tag(tag)
                .ok_or_else(|| unknown_keyword(ds, tag))?,
        };
        keywords.push(id);
        resolved.push(ResolvedKeyword {
            keyword_id: id,
            tag: ds.poi.tag(id).unwrap_or_default().to_string(),
        });
    }
    let source = ds
        .resolve_vertex(req.source)
        .map_err(|e| map_engine_error(ds, e))?;
    let destination = match req.destination {
        Some(d) => Some(ds.resolve_vertex(d).map_err(|e| map_engine_error(ds, e))?),
        None => None,
    };
    let query = Query {
        source,
        keywords,
        k: req.k,
        alpha: req.alpha,
        fixed_order: req.fixed_order,
        distance_budget: req.budget,
        destination,
        identical_ratings: false,
    };
    let opts = EngineOptions {
        deadline: Some(started + state.timeout),
        ..EngineOptions::default()
    };
    let outcome = katr_query(&ds.net, &ds.partition, &ds.poi, &query, &opts)
        .map_err(|e| map_engine_error(ds, e))?;
    let payload = ds.render_routes(&outcome);
    if outcome.timed_out {
        return Err(ServiceError::new(
            StatusCode::REQUEST_TIMEOUT,
            "timeout",
            format!("query exceeded {} ms", state.timeout.as_millis()),
        )
        .with_detail(
            "partial_routes",
            serde_json::to_value(&payload.routes).unwrap_or_default(),
        ));
    }
    Ok(SearchResponse {
        schema_version: SCHEMA_VERSION,
        source: req.source,
        keywords: resolved,
        routes: payload.routes,
        counters: payload.counters,
        partial: payload.partial,
        infeasible_budget: payload.infeasible_budget,
        timing_ms: started.elapsed().as_secs_f64() * 1e3,
    })
}

fn unknown_keyword(ds: &Dataset, input: &str) -> ServiceError {
    ServiceError::new(
        StatusCode::UNPROCESSABLE_ENTITY,
        "unknown_keyword",
        format!("keyword {input:?} is not in the catalog"),
    )
    .with_detail("nearest", json!(ds.poi.nearest_tags(input, 3)))
}

fn map_engine_error(ds: &Dataset, err: KatrError) -> ServiceError {
    match err {
        KatrError::Uncoverable { keyword, .. } => ServiceError::new(
            StatusCode::UNPROCESSABLE_ENTITY,
            "uncoverable_keyword",
            format!(
                "keyword {} ({:?}) has no POI",
                keyword,
                ds.poi.tag(keyword).unwrap_or("unknown")
            ),
        )
        .with_detail("keyword_id", json!(keyword)),
        KatrError::UnknownVertex(v) => ServiceError::new(
            StatusCode::UNPROCESSABLE_ENTITY,
            "unknown_vertex",
            format!("vertex {v} does not exist"),
        ),
        KatrError::InvalidQuery(msg) => {
            ServiceError::new(StatusCode::UNPROCESSABLE_ENTITY, "invalid_query", msg)
        }
        other => ServiceError::new(
            StatusCode::INTERNAL_SERVER_ERROR,
            "internal",
            other.to_string(),
        ),
    }
}

/// Binds and serves until ctrl-c.
pub async fn serve(state: Arc<ServiceState>, bind: &str) -> std::io::Result<()> {
    let listener = tokio::net::TcpListener::bind(bind).await?;
    log::info!("listening on {}", listener.local_addr()?);
    axum::serve(listener, router(state))
        .with_graceful_shutdown(async {
            let _ = tokio::signal::ctrl_c().await;
        })
        .await
}
