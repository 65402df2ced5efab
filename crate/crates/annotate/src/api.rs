//! JSON-over-HTTP routes.

use std::net::SocketAddr;
use std::path::PathBuf;
use std::sync::Arc;

use axum::extract::{Path, State};
use axum::http::{HeaderMap, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use serde_json::json;
use tower_http::services::ServeDir;

use crate::store::{LabelSubmission, StoreError, TaskStore};

/// Request header naming the annotator.
pub const ANNOTATOR_HEADER: &str = "x-annotator";

impl IntoResponse for StoreError {
    fn into_response(self) -> Response {
        let status = match &self {
            StoreError::NotFound(_) | StoreError::Exhausted => StatusCode::NOT_FOUND,
            StoreError::Validation { .. } => StatusCode::UNPROCESSABLE_ENTITY,
            StoreError::BadRequest(_) => StatusCode::BAD_REQUEST,
            StoreError::Conflict { .. } | StoreError::NoModels => StatusCode::CONFLICT,
            StoreError::Model(_) | StoreError::Io { .. } | StoreError::Jsonl { .. } => {
                tracing::error!(error = %self, "request failed");
                StatusCode::INTERNAL_SERVER_ERROR
            }
        };
        let mut body = json!({ "error": self.to_string() });
        if let StoreError::Validation { index, .. } = &self {
            body["index"] = json!(index);
        }
        (status, Json(body)).into_response()
    }
}

type Shared = Arc<TaskStore>;

fn annotator(headers: &HeaderMap) -> String {
    headers
        .get(ANNOTATOR_HEADER)
        .and_then(|v| v.to_str().ok())
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .unwrap_or("anonymous")
        .to_string()
}

/// Blocking work off the async executor.
async fn blocking<T: Send + 'static>(
    f: impl FnOnce() -> Result<T, StoreError> + Send + 'static,
) -> Result<T, StoreError> {
    tokio::task::spawn_blocking(f).await.expect("store task panicked")
}

async fn next(State(s): State<Shared>) -> Response {
    blocking(move || s.next()).await.map(Json).into_response()
}

async fn task(State(s): State<Shared>, Path(id): Path<String>) -> Response {
    blocking(move || s.get(&id)).await.map(Json).into_response()
}

async fn labels(
    State(s): State<Shared>,
    Path(id): Path<String>,
    headers: HeaderMap,
    Json(sub): Json<LabelSubmission>,
) -> Response {
    let who = annotator(&headers);
    blocking(move || s.save_labels(&id, &who, sub)).await.map(Json).into_response()
}

async fn ignore(State(s): State<Shared>, Path(id): Path<String>, headers: HeaderMap) -> Response {
    let who = annotator(&headers);
    blocking(move || s.ignore(&id, &who)).await.map(Json).into_response()
}

async fn stats(State(s): State<Shared>) -> Response {
    Json(s.stats()).into_response()
}

async fn review(State(s): State<Shared>) -> Response {
    blocking(move || s.review()).await.map(Json).into_response()
}

/// The API routes, plus the static UI bundle at `/` when a directory is given.
pub fn router(store: Shared, ui_dir: Option<PathBuf>) -> Router {
    let api = Router::new()
        .route("/api/tasks/next", get(next))
        .route("/api/tasks/{id}", get(task))
        .route("/api/tasks/{id}/labels", post(labels))
        .route("/api/tasks/{id}/ignore", post(ignore))
        .route("/api/stats", get(stats))
        .route("/api/review", get(review))
        .with_state(store);
    match ui_dir {
        Some(dir) if dir.is_dir() => api.fallback_service(ServeDir::new(dir)),
        _ => api,
    }
}

/// Serves until the process is stopped.
pub fn serve_blocking(store: TaskStore, addr: SocketAddr, ui_dir: Option<PathBuf>) -> std::io::Result<()> {
    let rt = tokio::runtime::Runtime::new()?;
    rt.block_on(async move {
        let listener = tokio::net::TcpListener::bind(addr).await?;
        tracing::info!(addr = %listener.local_addr()?, tasks = store.len(), "annotation service listening");
        axum::serve(listener, router(Arc::new(store), ui_dir)).await
    })
}
