use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::Json;
use serde::{Deserialize, Serialize};

use snapmark_core::model::ModelError;
use snapmark_core::platform::PlatformError;
use snapmark_core::StoreError;

/// Error body returned by every endpoint.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ApiError {
    pub status: u16,
    pub code: String,
    pub message: String,
}

impl ApiError {
    pub fn new(status: StatusCode, code: &str, message: impl Into<String>) -> Self {
        ApiError {
            status: status.as_u16(),
            code: code.to_owned(),
            message: message.into(),
        }
    }

    pub fn bad_request(code: &str, message: impl Into<String>) -> Self {
        ApiError::new(StatusCode::BAD_REQUEST, code, message)
    }

    pub fn not_found(message: impl Into<String>) -> Self {
        ApiError::new(StatusCode::NOT_FOUND, "not_found", message)
    }

    pub fn internal(message: impl Into<String>) -> Self {
        ApiError::new(StatusCode::INTERNAL_SERVER_ERROR, "internal", message)
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        let status = StatusCode::from_u16(self.status).unwrap_or(StatusCode::INTERNAL_SERVER_ERROR);
        if status.is_server_error() {
            log::error!("{} {}: {}", self.status, self.code, self.message);
        }
        (status, Json(self)).into_response()
    }
}

impl From<StoreError> for ApiError {
    fn from(e: StoreError) -> Self {
        let msg = e.to_string();
        match e {
            StoreError::NotFound(_) => ApiError::not_found(msg),
            StoreError::Collision(_) => ApiError::new(StatusCode::CONFLICT, "conflict", msg),
            StoreError::InvalidImage(_) => ApiError::bad_request("invalid_image", msg),
            StoreError::InvalidRecord(_) => ApiError::bad_request("invalid_record", msg),
            StoreError::InvalidEdit(_) => ApiError::bad_request("invalid_edit", msg),
            StoreError::Io { .. } => ApiError::new(StatusCode::INTERNAL_SERVER_ERROR, "storage", msg),
        }
    }
}

impl From<ModelError> for ApiError {
    fn from(e: ModelError) -> Self {
        let msg = e.to_string();
        match e {
            ModelError::InvalidEdit(_) => ApiError::bad_request("invalid_edit", msg),
            ModelError::InvalidInput(_) | ModelError::InvalidLocator(_) => {
                ApiError::bad_request("invalid_input", msg)
            }
        }
    }
}

impl From<PlatformError> for ApiError {
    fn from(e: PlatformError) -> Self {
        let msg = e.to_string();
        match e {
            PlatformError::InvalidRegion(_) => ApiError::bad_request("invalid_region", msg),
            PlatformError::ScenarioParse(_) | PlatformError::InvalidScenario(_) => {
                ApiError::bad_request("invalid_scenario", msg)
            }
            PlatformError::InvalidInput(_) => ApiError::bad_request("invalid_input", msg),
            PlatformError::Model(m) => m.into(),
            PlatformError::ProviderUnavailable(_) | PlatformError::Io { .. } => {
                ApiError::new(StatusCode::BAD_GATEWAY, "provider", msg)
            }
            PlatformError::Registry { .. } | PlatformError::Encode(_) => ApiError::internal(msg),
        }
    }
}
