use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::Json;
use rcses_core::inference::SlotRef;
use rcses_core::{InferenceError, ParseIssue};
use serde::Serialize;

/// JSON error body: `{error, detail, slot?, path?, issues?}`.
#[derive(Debug, Clone, Serialize)]
pub struct ErrorBody {
    pub error: String,
    pub detail: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub slot: Option<SlotRef>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub path: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub issues: Option<serde_json::Value>,
}

#[derive(Debug, Clone)]
pub struct ApiError {
    pub status: StatusCode,
    pub body: Box<ErrorBody>,
}

impl ApiError {
    pub fn new(status: StatusCode, error: &str, detail: impl Into<String>) -> Self {
        Self {
            status,
            body: Box::new(ErrorBody {
                error: error.to_owned(),
                detail: detail.into(),
                slot: None,
                path: None,
                issues: None,
            }),
        }
    }

    pub fn session_not_found(id: &str) -> Self {
        Self::new(
            StatusCode::NOT_FOUND,
            "SessionNotFound",
            format!("no live session {id:?}"),
        )
    }

    pub fn bad_request(detail: impl Into<String>) -> Self {
        Self::new(StatusCode::BAD_REQUEST, "BadRequest", detail)
    }

    pub fn unauthorized() -> Self {
        Self::new(
            StatusCode::UNAUTHORIZED,
            "Unauthorized",
            "a valid admin bearer token is required",
        )
    }

    pub fn internal(detail: impl Into<String>) -> Self {
        Self::new(StatusCode::INTERNAL_SERVER_ERROR, "Internal", detail)
    }

    /// 422 carrying parse issues; `path` is the first error's location.
    pub fn parse_issues(issues: &[ParseIssue]) -> Self {
        let first = issues.iter().find(|i| i.is_error()).or(issues.first());
        let mut err = Self::new(
            StatusCode::UNPROCESSABLE_ENTITY,
            "ParseError",
            first.map_or_else(|| "document rejected".to_owned(), ToString::to_string),
        );
        err.body.path = first.map(|i| i.path.clone());
        err.body.issues = serde_json::to_value(issues).ok();
        err
    }
}

impl From<InferenceError> for ApiError {
    fn from(err: InferenceError) -> Self {
        let status = match err {
            InferenceError::StaleKb { .. } => StatusCode::CONFLICT,
            _ => StatusCode::UNPROCESSABLE_ENTITY,
        };
        let mut out = Self::new(status, err.code(), err.to_string());
        out.body.slot = err.slot();
        out
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        (self.status, Json(*self.body)).into_response()
    }
}
