use std::path::PathBuf;
use std::sync::Arc;

use axum::extract::rejection::JsonRejection;
use axum::extract::{Path, Query, State};
use axum::http::{header, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use serde::Deserialize;
use serde_json::json;

use crate::error::ServiceError;
use crate::project::{Submission, TaskStatus};
use crate::store::Store;
use crate::tutorial::TutorialAnswers;

/// Error body `{"error": code, "detail": message}`; rejected submissions
/// also carry `"offenders"`.
pub struct ApiError(ServiceError);

impl From<ServiceError> for ApiError {
    fn from(e: ServiceError) -> Self {
        ApiError(e)
    }
}

impl From<JsonRejection> for ApiError {
    fn from(e: JsonRejection) -> Self {
        ApiError(ServiceError::Core(simpeval_core::Error::Parse { line: None, message: e.body_text() }))
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        let status = match &self.0 {
            ServiceError::ProjectNotFound(_) | ServiceError::TaskNotFound { .. } => StatusCode::NOT_FOUND,
            ServiceError::NotQualified(_) => StatusCode::FORBIDDEN,
            ServiceError::NameConflict(_)
            | ServiceError::StatusRegression { .. }
            | ServiceError::EmptyExport
            | ServiceError::NoGold => StatusCode::CONFLICT,
            ServiceError::Io(_) | ServiceError::CorruptLog { .. } => StatusCode::INTERNAL_SERVER_ERROR,
            ServiceError::Core(e) if e.is_io() => StatusCode::INTERNAL_SERVER_ERROR,
            _ => StatusCode::UNPROCESSABLE_ENTITY,
        };
        let mut body = json!({ "error": self.0.code(), "detail": self.0.to_string() });
        if let ServiceError::InvalidSubmission(offenders) = &self.0 {
            body["offenders"] = json!(offenders);
        }
        (status, Json(body)).into_response()
    }
}

type ApiResult<T> = Result<T, ApiError>;

#[derive(Deserialize)]
struct CreateProject {
    name: String,
    /// Path of a dataset file readable by the server.
    dataset: PathBuf,
}

#[derive(Deserialize)]
struct AnnotatorQuery {
    annotator: String,
}

#[derive(Deserialize)]
struct Progress {
    annotator: String,
    status: TaskStatus,
}

pub fn router(store: Arc<Store>) -> Router {
    Router::new()
        .route("/projects", post(create_project))
        .route("/projects/{id}/next-task", get(next_task))
        .route("/projects/{id}/tasks/{tid}/submission", post(submit))
        .route("/projects/{id}/tasks/{tid}/progress", post(progress))
        .route("/projects/{id}/agreement", get(agreement))
        .route("/projects/{id}/export", get(export))
        .route("/annotators/{id}/tutorial", post(tutorial))
        .with_state(store)
}

/// Serves on `0.0.0.0:port` until the process is stopped.
pub async fn serve(store: Arc<Store>, port: u16) -> std::io::Result<()> {
    let listener = tokio::net::TcpListener::bind(("0.0.0.0", port)).await?;
    axum::serve(listener, router(store)).await
}

async fn create_project(
    State(store): State<Arc<Store>>,
    body: Result<Json<CreateProject>, JsonRejection>,
) -> ApiResult<impl IntoResponse> {
    let Json(req) = body?;
    let id = store.create_project_from_path(&req.name, &req.dataset)?;
    Ok((StatusCode::CREATED, Json(json!({ "id": id }))))
}

async fn next_task(
    State(store): State<Arc<Store>>,
    Path(id): Path<String>,
    Query(q): Query<AnnotatorQuery>,
) -> ApiResult<impl IntoResponse> {
    Ok(Json(store.next_task(&id, &q.annotator)?))
}

async fn submit(
    State(store): State<Arc<Store>>,
    Path((id, tid)): Path<(String, usize)>,
    body: Result<Json<Submission>, JsonRejection>,
) -> ApiResult<impl IntoResponse> {
    let Json(sub) = body?;
    Ok(Json(store.submit(&id, tid, sub)?))
}

async fn progress(
    State(store): State<Arc<Store>>,
    Path((id, tid)): Path<(String, usize)>,
    body: Result<Json<Progress>, JsonRejection>,
) -> ApiResult<impl IntoResponse> {
    let Json(p) = body?;
    store.record_progress(&id, &p.annotator, tid, p.status)?;
    Ok(StatusCode::NO_CONTENT)
}

async fn agreement(State(store): State<Arc<Store>>, Path(id): Path<String>) -> ApiResult<impl IntoResponse> {
    Ok(Json(store.agreement(&id)?))
}

async fn export(State(store): State<Arc<Store>>, Path(id): Path<String>) -> ApiResult<impl IntoResponse> {
    let body = store.export(&id)?.to_jsonl();
    Ok(([(header::CONTENT_TYPE, "application/x-ndjson")], body))
}

async fn tutorial(
    State(store): State<Arc<Store>>,
    Path(id): Path<String>,
    body: Result<Json<TutorialAnswers>, JsonRejection>,
) -> ApiResult<impl IntoResponse> {
    let Json(answers) = body?;
    Ok(Json(store.score_tutorial(&id, &answers)?))
}
