use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::Json;
use serde_json::json;

use scorelens_api::ErrorBody;
use scorelens_core::Error;

#[derive(Debug, thiserror::Error)]
pub enum ServiceError {
    #[error("invalid service config: {0}")]
    Config(String),
    #[error(transparent)]
    Core(#[from] Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// An error on its way to becoming a JSON response.
#[derive(Debug)]
pub struct ApiError {
    pub status: StatusCode,
    pub body: ErrorBody,
}

impl ApiError {
    pub fn new(status: StatusCode, error: impl Into<String>, detail: serde_json::Value) -> Self {
        ApiError {
            status,
            body: ErrorBody {
                error: error.into(),
                detail,
            },
        }
    }

    pub fn bad_field(field: &str, error: impl Into<String>) -> Self {
        Self::new(StatusCode::BAD_REQUEST, error, json!({ "field": field }))
    }

    pub fn not_found(what: &str, id: &str) -> Self {
        Self::new(StatusCode::NOT_FOUND, format!("{what} not found: {id}"), json!({ what: id }))
    }
}

pub fn status_for(e: &Error) -> StatusCode {
    match e {
        Error::ModelNotFound(_) | Error::UnknownExample(_) | Error::UnknownSlot(_) => StatusCode::NOT_FOUND,
        Error::ExternalTimeout { .. } => StatusCode::GATEWAY_TIMEOUT,
        Error::ExternalUnreachable { .. } | Error::ExternalStatus { .. } => StatusCode::BAD_GATEWAY,
        Error::VariantFailed { source, .. } => status_for(source),
        e if e.is_client_error() => StatusCode::BAD_REQUEST,
        _ => StatusCode::INTERNAL_SERVER_ERROR,
    }
}

/// Structured fields for the `detail` member.
pub fn detail_for(e: &Error) -> serde_json::Value {
    match e {
        Error::ModelNotFound(id) => json!({ "model_id": id }),
        Error::UnknownExample(id) => json!({ "example_id": id }),
        Error::UnknownSlot(id) => json!({ "slot_id": id }),
        Error::SummaryTooLong { tokens, limit } => json!({ "tokens": tokens, "limit": limit }),
        Error::InvalidConfig { model_id, reason } => json!({ "model_id": model_id, "reason": reason }),
        Error::ExternalUnreachable { endpoint, reason } => json!({ "endpoint": endpoint, "reason": reason }),
        Error::ExternalTimeout { endpoint, seconds } => json!({ "endpoint": endpoint, "seconds": seconds }),
        Error::ExternalStatus { endpoint, status } => json!({ "endpoint": endpoint, "status": status }),
        Error::Schema { field, reason } => json!({ "field": field, "reason": reason }),
        Error::MaskViolation { layer, head, query, key } => {
            json!({ "layer": layer, "head": head, "query": query, "key": key })
        }
        Error::OutOfRange { what, index, bound } => json!({ "field": what, "index": index, "bound": bound }),
        Error::VariantFailed { index, source } => json!({ "variant": index, "cause": detail_for(source) }),
        Error::DegenerateRubric(c) => json!({ "criterion": c }),
        Error::DegenerateComponent(c) => json!({ "component": c }),
        Error::TooFewRows(n) => json!({ "rows": n }),
        Error::RubricRange { row, column, value } => json!({ "row": row, "column": column, "value": value }),
        Error::CorruptLog { line, reason } => json!({ "line": line, "reason": reason }),
        Error::Parse { what, line, reason } => json!({ "what": what, "line": line, "reason": reason }),
        Error::EmptyInput(what) => json!({ "field": what }),
        _ => json!({}),
    }
}

impl From<Error> for ApiError {
    fn from(e: Error) -> Self {
        ApiError::new(status_for(&e), e.to_string(), detail_for(&e))
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        (self.status, Json(self.body)).into_response()
    }
}

pub type ApiResult<T> = std::result::Result<Json<T>, ApiError>;
