use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::Json;
use notobot_pipeline::CommandError;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

/// Body of every non-2xx response.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ApiError {
    pub code: String,
    pub message: String,
    #[serde(default)]
    pub details: Value,
}

/// An [`ApiError`] paired with its HTTP status.
#[derive(Debug, Clone)]
pub struct ApiFailure {
    pub status: StatusCode,
    pub error: ApiError,
}

impl ApiFailure {
    pub fn new(status: StatusCode, code: &str, message: impl Into<String>, details: Value) -> Self {
        Self {
            status,
            error: ApiError { code: code.into(), message: message.into(), details },
        }
    }

    pub fn bad_request(message: impl Into<String>, details: Value) -> Self {
        Self::new(StatusCode::BAD_REQUEST, "bad_request", message, details)
    }

    pub fn not_found(message: impl Into<String>, details: Value) -> Self {
        Self::new(StatusCode::NOT_FOUND, "not_found", message, details)
    }

    pub fn conflict(code: &str, message: impl Into<String>, details: Value) -> Self {
        Self::new(StatusCode::CONFLICT, code, message, details)
    }
}

impl IntoResponse for ApiFailure {
    fn into_response(self) -> Response {
        (self.status, Json(self.error)).into_response()
    }
}

impl From<CommandError> for ApiFailure {
    fn from(e: CommandError) -> Self {
        match e {
            CommandError::NotFound(id) => {
                ApiFailure::not_found(format!("no candidate with id {id}"), json!({ "id": id }))
            }
            CommandError::InvalidTransition { pending_id, from, to } => ApiFailure::conflict(
                "invalid_transition",
                format!("candidate {pending_id} is {from} and cannot become {to}"),
                json!({ "id": pending_id, "from": from, "to": to }),
            ),
            CommandError::Stopped => ApiFailure::new(
                StatusCode::SERVICE_UNAVAILABLE,
                "pipeline_stopped",
                "the pipeline is shutting down",
                Value::Null,
            ),
            CommandError::Internal(msg) => {
                ApiFailure::new(StatusCode::INTERNAL_SERVER_ERROR, "internal", msg, Value::Null)
            }
        }
    }
}
