use std::sync::Arc;

use axum::body::Bytes;
use axum::extract::{Path, State};
use axum::http::{header, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use serde::de::DeserializeOwned;
use sonolearn_core::study::{Feedback, StudyConfig};

use crate::error::ApiError;
use crate::store::AppState;

type Shared = State<Arc<AppState>>;
type ApiResult<T> = Result<T, ApiError>;

pub fn router(state: Arc<AppState>) -> Router {
    Router::new()
        .route("/health", get(health))
        .route("/sessions", post(create_session).get(list_sessions))
        .route("/sessions/{id}/next", get(next_trial))
        .route("/sessions/{id}/trials/{tid}/feedback", post(submit_feedback))
        .route("/sessions/{id}/status", get(session_status))
        .route("/sessions/{id}/report", get(session_report))
        .route("/libraries", get(list_libraries))
        .route("/libraries/{lib}/manifest", get(library_manifest))
        .route("/libraries/{lib}/audio/{file}", get(library_audio))
        .fallback(|| async { ApiError::new(StatusCode::NOT_FOUND, "not_found", "no such route") })
        .with_state(state)
}

fn parse_body<T: DeserializeOwned>(body: &Bytes) -> ApiResult<T> {
    serde_json::from_slice(body).map_err(|e| ApiError::new(StatusCode::BAD_REQUEST, "invalid_json", e.to_string()))
}

fn missing_session(id: &str) -> ApiError {
    ApiError::not_found("session", id)
}

async fn health() -> Json<serde_json::Value> {
    Json(serde_json::json!({ "status": "ok" }))
}

async fn create_session(State(state): Shared, body: Bytes) -> ApiResult<Response> {
    let config: StudyConfig = parse_body(&body)?;
    let view = state.create(config).await?;
    Ok((StatusCode::CREATED, Json(view)).into_response())
}

async fn list_sessions(State(state): Shared) -> Json<Vec<String>> {
    Json(state.session_ids())
}

async fn next_trial(State(state): Shared, Path(id): Path<String>) -> ApiResult<Response> {
    let view = state.next(&id).await.ok_or_else(|| missing_session(&id))??;
    Ok(Json(view).into_response())
}

async fn submit_feedback(State(state): Shared, Path((id, tid)): Path<(String, String)>, body: Bytes) -> ApiResult<Response> {
    let trial_id: u64 = tid
        .parse()
        .map_err(|_| ApiError::new(StatusCode::BAD_REQUEST, "invalid_request", format!("bad trial id `{tid}`")))?;
    let feedback: Feedback = parse_body(&body)?;
    let ack = state
        .feedback(&id, trial_id, feedback)
        .await
        .ok_or_else(|| missing_session(&id))??;
    Ok(Json(ack).into_response())
}

async fn session_status(State(state): Shared, Path(id): Path<String>) -> ApiResult<Response> {
    let view = state.status(&id).await.ok_or_else(|| missing_session(&id))?;
    Ok(Json(view).into_response())
}

async fn session_report(State(state): Shared, Path(id): Path<String>) -> ApiResult<Response> {
    let report = state
        .with_session(&id, |s| s.report())
        .await
        .ok_or_else(|| missing_session(&id))??;
    Ok(Json(report).into_response())
}

async fn list_libraries(State(state): Shared) -> Json<Vec<String>> {
    Json(state.library_ids())
}

async fn library_manifest(State(state): Shared, Path(lib): Path<String>) -> ApiResult<Response> {
    let library = state.library(&lib).ok_or_else(|| ApiError::not_found("library", &lib))?;
    Ok(Json(&library.manifest).into_response())
}

async fn library_audio(State(state): Shared, Path((lib, file)): Path<(String, String)>) -> ApiResult<Response> {
    let library = state.library(&lib).ok_or_else(|| ApiError::not_found("library", &lib))?;
    if !file.ends_with(".wav") {
        return Err(ApiError::not_found("sound", &file));
    }
    let entry = library.sound(&file).ok_or_else(|| ApiError::not_found("sound", &file))?;
    let path = library.dir.join(&entry.file);
    let bytes = tokio::fs::read(&path).await.map_err(|e| {
        tracing::error!(path = %path.display(), error = %e, "audio read failed");
        ApiError::new(StatusCode::INTERNAL_SERVER_ERROR, "internal", "sound file unavailable")
    })?;
    Ok((
        [
            (header::CONTENT_TYPE, "audio/wav"),
            (header::CACHE_CONTROL, "public, max-age=31536000, immutable"),
        ],
        bytes,
    )
        .into_response())
}
