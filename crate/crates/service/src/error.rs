use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::Json;
use serde::{Deserialize, Serialize};
use sonolearn_core::Error as CoreError;

#[derive(Debug, thiserror::Error)]
#[error("config: {0}")]
pub struct ConfigError(pub String);

/// JSON error body.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ErrorBody {
    pub code: String,
    pub message: String,
}

#[derive(Debug)]
pub struct ApiError {
    pub status: StatusCode,
    pub code: &'static str,
    pub message: String,
}

impl ApiError {
    pub fn new(status: StatusCode, code: &'static str, message: impl Into<String>) -> Self {
        Self {
            status,
            code,
            message: message.into(),
        }
    }

    pub fn not_found(what: &str, id: &str) -> Self {
        Self::new(StatusCode::NOT_FOUND, "not_found", format!("{what} `{id}` not found"))
    }
}

impl From<CoreError> for ApiError {
    fn from(e: CoreError) -> Self {
        use CoreError::*;
        let (status, code) = match &e {
            TrialPending => (StatusCode::CONFLICT, "trial_pending"),
            StaleTrial { .. } | NoPendingTrial => (StatusCode::CONFLICT, "stale_trial"),
            SessionComplete => (StatusCode::CONFLICT, "session_complete"),
            NotFinished(_) => (StatusCode::CONFLICT, "not_finished"),
            UnknownLibrary(_) => (StatusCode::BAD_REQUEST, "unknown_library"),
            InvalidConfidence(_) => (StatusCode::BAD_REQUEST, "invalid_confidence"),
            UnknownState(_) => (StatusCode::BAD_REQUEST, "unknown_state"),
            MissingPriors(_) | PriorOutOfRange { .. } | InvalidPriors(_) => (StatusCode::BAD_REQUEST, "invalid_priors"),
            InvalidGrid(_)
            | LevelOutOfRange { .. }
            | LevelArity { .. }
            | ActionOutOfRange { .. }
            | InvalidStates(_)
            | InvalidHyperparameters(_)
            | InvalidConfig(_)
            | MixedGrids
            | Study(_) => (StatusCode::BAD_REQUEST, "invalid_request"),
            Json(_) => (StatusCode::BAD_REQUEST, "invalid_json"),
            _ => (StatusCode::INTERNAL_SERVER_ERROR, "internal"),
        };
        if status.is_server_error() {
            tracing::error!(error = %e, "request failed");
        }
        Self::new(status, code, e.to_string())
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        let body = ErrorBody {
            code: self.code.into(),
            message: self.message,
        };
        (self.status, Json(body)).into_response()
    }
}
