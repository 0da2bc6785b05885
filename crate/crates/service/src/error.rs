use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::Json;
use globalize_core::engines::EngineError;
use globalize_core::model::ModelError;
use globalize_core::pipeline::PipelineError;
use globalize_core::store::StoreError;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

/// Wire shape of every error response.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ErrorBody {
    pub code: String,
    pub message: String,
    #[serde(default)]
    pub details: Value,
}

#[derive(Debug)]
pub struct ApiError {
    pub status: StatusCode,
    pub body: ErrorBody,
}

impl ApiError {
    pub fn new(status: StatusCode, code: &str, message: impl Into<String>) -> Self {
        Self {
            status,
            body: ErrorBody {
                code: code.to_string(),
                message: message.into(),
                details: Value::Null,
            },
        }
    }

    pub fn with_details(mut self, details: Value) -> Self {
        self.body.details = details;
        self
    }

    pub fn not_found(what: impl Into<String>) -> Self {
        Self::new(StatusCode::NOT_FOUND, "NOT_FOUND", what)
    }

    pub fn bad_request(message: impl Into<String>) -> Self {
        Self::new(StatusCode::BAD_REQUEST, "BAD_REQUEST", message)
    }

    pub fn validation(message: impl Into<String>) -> Self {
        Self::new(
            StatusCode::UNPROCESSABLE_ENTITY,
            "VALIDATION_FAILED",
            message,
        )
    }

    pub fn busy(project: &str) -> Self {
        Self::new(
            StatusCode::CONFLICT,
            "STAGE_IN_PROGRESS",
            format!("a stage is already running on project {project}"),
        )
    }

    pub fn internal(message: impl Into<String>) -> Self {
        Self::new(StatusCode::INTERNAL_SERVER_ERROR, "INTERNAL", message)
    }
}

impl From<EngineError> for ApiError {
    fn from(e: EngineError) -> Self {
        let message = e.to_string();
        match e {
            EngineError::Unavailable { engine, .. } => Self::new(
                StatusCode::SERVICE_UNAVAILABLE,
                "ADAPTER_UNAVAILABLE",
                message,
            )
            .with_details(json!({ "engine": engine })),
            EngineError::UnsupportedMedia(_) => Self::new(
                StatusCode::UNPROCESSABLE_ENTITY,
                "UNSUPPORTED_MEDIA",
                message,
            ),
            EngineError::InvalidInput(_) => Self::validation(message),
            _ => Self::new(StatusCode::BAD_GATEWAY, "ADAPTER_FAILED", message),
        }
    }
}

impl From<StoreError> for ApiError {
    fn from(e: StoreError) -> Self {
        match e {
            StoreError::NotFound(_) | StoreError::InvalidId(_) => Self::not_found(e.to_string()),
            _ => Self::internal(e.to_string()),
        }
    }
}

impl From<PipelineError> for ApiError {
    fn from(e: PipelineError) -> Self {
        let message = e.to_string();
        match e {
            PipelineError::OutOfOrder { requested, current } => {
                Self::new(StatusCode::CONFLICT, "OUT_OF_ORDER", message)
                    .with_details(json!({ "requested": requested, "current": current }))
            }
            PipelineError::MissingTrack(kind) => {
                Self::new(StatusCode::NOT_FOUND, "MISSING_TRACK", message)
                    .with_details(json!({ "kind": kind }))
            }
            PipelineError::SameLanguage(_) | PipelineError::Model(ModelError::SameLanguage(_)) => {
                Self::validation(message)
            }
            PipelineError::InvalidTranscript(report) => Self::validation(message).with_details(
                json!({ "violations": report.violations.iter().map(|v| v.to_string()).collect::<Vec<_>>() }),
            ),
            PipelineError::Model(_) => Self::validation(message),
            PipelineError::Engine(e) => e.into(),
            PipelineError::Store(e) => e.into(),
            _ => Self::internal(message),
        }
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        (self.status, Json(self.body)).into_response()
    }
}
