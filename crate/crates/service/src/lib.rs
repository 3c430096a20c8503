//! HTTP facade over the SGL engine.
//!
//! | method | path            | body             | success                 |
//! |--------|-----------------|------------------|-------------------------|
//! | POST   | `/query`        | JSON query       | 200 JSON or raw SVG     |
//! | PUT    | `/tables/{name}`| CSV text         | 201 table schema        |
//! | GET    | `/tables`       |                  | 200 list of schemas     |
//! | GET    | `/health`       |                  | 200 status and version  |
//!
//! Failed requests answer 400 (or 500 for backend faults) with
//! `{"diagnostics": [...]}`, each entry carrying a code and a position.

use std::sync::Arc;
use std::time::Instant;

use axum::body::Bytes;
use axum::extract::{DefaultBodyLimit, Path, State};
use axum::http::{header, HeaderMap, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post, put};
use axum::{Json, Router};
use serde::{Deserialize, Serialize};
use sgl_core::{Code, Database, Diagnostic, ReplacePolicy, RunOptions, Span, TableSchema};

/// Largest accepted request body.
pub const BODY_LIMIT: usize = 32 * 1024 * 1024;
pub const PORT_ENV: &str = "SGL_PORT";
pub const DEFAULT_PORT: u16 = 8080;
pub const VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug, Clone, Deserialize)]
pub struct QueryRequest {
    pub sgl: String,
    #[serde(default)]
    pub seed: Option<u64>,
    #[serde(default)]
    pub width: Option<f64>,
    #[serde(default)]
    pub height: Option<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct QueryResponse {
    pub svg: String,
    pub warnings: Vec<Diagnostic>,
    pub timing_ms: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ErrorResponse {
    pub diagnostics: Vec<Diagnostic>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Health {
    pub status: String,
    pub version: String,
}

#[derive(Clone)]
pub struct AppState {
    pub db: Arc<Database>,
    pub options: RunOptions,
}

impl AppState {
    pub fn new(db: Database) -> Self {
        AppState {
            db: Arc::new(db),
            options: RunOptions::default(),
        }
    }
}

/// Port from `SGL_PORT`, falling back to 8080.
pub fn port_from_env() -> Result<u16, String> {
    match std::env::var(PORT_ENV) {
        Ok(v) if !v.trim().is_empty() => v
            .trim()
            .parse()
            .map_err(|_| format!("{PORT_ENV}={v} is not a valid port")),
        _ => Ok(DEFAULT_PORT),
    }
}

fn failure(diagnostics: Vec<Diagnostic>) -> Response {
    let status = if diagnostics.iter().any(|d| d.code == Code::Backend) {
        StatusCode::INTERNAL_SERVER_ERROR
    } else {
        StatusCode::BAD_REQUEST
    };
    (status, Json(ErrorResponse { diagnostics })).into_response()
}

fn bad_request(message: impl Into<String>) -> Response {
    failure(vec![Diagnostic::error(
        Code::InvalidRequest,
        Span::new(0, 0, 1, 1),
        message,
    )])
}

fn internal(message: impl Into<String>) -> Response {
    failure(vec![Diagnostic::error(Code::Backend, Span::new(0, 0, 1, 1), message)])
}

fn wants_svg(headers: &HeaderMap) -> bool {
    headers
        .get(header::ACCEPT)
        .and_then(|v| v.to_str().ok())
        .is_some_and(|v| v.contains("image/svg+xml"))
}

async fn query(State(state): State<AppState>, headers: HeaderMap, body: Bytes) -> Response {
    let req: QueryRequest = match serde_json::from_slice(&body) {
        Ok(r) => r,
        Err(e) => return bad_request(format!("invalid query request: {e}")),
    };
    let mut options = state.options.clone();
    if let Some(seed) = req.seed {
        options.engine.seed = seed;
    }
    if let Some(w) = req.width {
        options.render.width = w;
    }
    if let Some(h) = req.height {
        options.render.height = h;
    }
    if let Err(e) = options.render.validate() {
        return bad_request(e.to_string());
    }

    let started = Instant::now();
    let db = state.db.clone();
    let outcome =
        tokio::task::spawn_blocking(move || sgl_core::run_statement(&db, &req.sgl, &options)).await;
    let timing_ms = started.elapsed().as_secs_f64() * 1000.0;
    match outcome {
        Err(e) => internal(format!("query task failed: {e}")),
        Ok(Err(diagnostics)) => failure(diagnostics),
        Ok(Ok(out)) if wants_svg(&headers) => {
            ([(header::CONTENT_TYPE, "image/svg+xml")], out.svg).into_response()
        }
        Ok(Ok(out)) => Json(QueryResponse {
            svg: out.svg,
            warnings: out.warnings,
            timing_ms,
        })
        .into_response(),
    }
}

async fn put_table(State(state): State<AppState>, Path(name): Path<String>, body: Bytes) -> Response {
    let db = state.db.clone();
    let outcome =
        tokio::task::spawn_blocking(move || db.load_csv(body.as_ref(), &name, ReplacePolicy::Replace))
            .await;
    match outcome {
        Err(e) => internal(format!("ingestion task failed: {e}")),
        Ok(Err(d)) => failure(vec![d]),
        Ok(Ok(schema)) => (StatusCode::CREATED, Json(schema)).into_response(),
    }
}

async fn list_tables(State(state): State<AppState>) -> Response {
    let db = state.db.clone();
    match tokio::task::spawn_blocking(move || db.tables()).await {
        Err(e) => internal(format!("catalog task failed: {e}")),
        Ok(Err(d)) => failure(vec![d]),
        Ok(Ok(tables)) => Json::<Vec<TableSchema>>(tables).into_response(),
    }
}

async fn health() -> Json<Health> {
    Json(Health {
        status: "ok".to_string(),
        version: VERSION.to_string(),
    })
}

pub fn router(state: AppState) -> Router {
    Router::new()
        .route("/query", post(query))
        .route("/tables", get(list_tables))
        .route("/tables/{name}", put(put_table))
        .route("/health", get(health))
        .layer(DefaultBodyLimit::max(BODY_LIMIT))
        .with_state(state)
}

/// Serve until ctrl-c.
pub async fn serve(listener: tokio::net::TcpListener, state: AppState) -> std::io::Result<()> {
    axum::serve(listener, router(state))
        .with_graceful_shutdown(async {
            let _ = tokio::signal::ctrl_c().await;
        })
        .await
}
