use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::Json;
use fw_core::metrics::MetricsError;
use fw_core::store::{ReportError, StoreError};
use serde::Serialize;

/// Error body returned by every endpoint: `{"error": {code, message, detail_code?}}`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ErrorBody {
    pub code: String,
    pub message: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub detail_code: Option<String>,
}

#[derive(Debug)]
pub struct ApiError {
    pub status: StatusCode,
    pub body: ErrorBody,
}

impl ApiError {
    pub fn new(status: StatusCode, code: &str, message: impl Into<String>) -> ApiError {
        ApiError {
            status,
            body: ErrorBody {
                code: code.to_owned(),
                message: message.into(),
                detail_code: None,
            },
        }
    }

    pub fn bad_request(message: impl Into<String>) -> ApiError {
        ApiError::new(StatusCode::BAD_REQUEST, "BAD_REQUEST", message)
    }

    pub fn unauthorized() -> ApiError {
        ApiError::new(StatusCode::UNAUTHORIZED, "UNAUTHORIZED", "missing or unknown bearer token")
    }

    pub fn not_found(code: &str, message: impl Into<String>) -> ApiError {
        ApiError::new(StatusCode::NOT_FOUND, code, message)
    }
}

impl From<StoreError> for ApiError {
    fn from(e: StoreError) -> ApiError {
        let status = match &e {
            StoreError::LeaseInvalid(_) | StoreError::LeaseHeld { .. } => StatusCode::CONFLICT,
            StoreError::Validation(_) => StatusCode::UNPROCESSABLE_ENTITY,
            StoreError::UnknownAs(_) | StoreError::UnknownDocument(_) | StoreError::UnknownSentence(_) => {
                StatusCode::NOT_FOUND
            }
            StoreError::ReadOnly(_) => StatusCode::FORBIDDEN,
            _ => StatusCode::INTERNAL_SERVER_ERROR,
        };
        let mut err = ApiError::new(status, e.code(), e.to_string());
        err.body.detail_code = e.detail_code().map(str::to_owned);
        err
    }
}

impl From<ReportError> for ApiError {
    fn from(e: ReportError) -> ApiError {
        let status = match &e {
            ReportError::UnknownTable(_) => StatusCode::NOT_FOUND,
            ReportError::Metrics(MetricsError::UnfinalizedAs(_)) => StatusCode::CONFLICT,
            ReportError::Metrics(_) => StatusCode::UNPROCESSABLE_ENTITY,
        };
        ApiError::new(status, e.code(), e.to_string())
    }
}

#[derive(Serialize)]
struct Envelope<'a> {
    error: &'a ErrorBody,
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        (self.status, Json(Envelope { error: &self.body })).into_response()
    }
}
