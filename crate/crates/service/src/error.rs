use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::Json;
use mup_agents::AgentError;
use mup_llm::orchestrator::TaskErrorKind;
use serde_json::json;

#[derive(Debug, thiserror::Error)]
pub enum ServiceError {
    #[error("unknown session `{0}`")]
    UnknownSession(String),
    #[error("unknown scenario `{0}`")]
    UnknownScenario(String),
    #[error("unknown eval job `{0}`")]
    UnknownJob(String),
    #[error("session `{0}` is already handling a request")]
    Busy(String),
    #[error("{0}")]
    Invalid(String),
    #[error("backend failure: {0}")]
    Backend(String),
    #[error("{0}")]
    Internal(String),
}

impl ServiceError {
    pub fn status(&self) -> StatusCode {
        match self {
            ServiceError::UnknownSession(_) | ServiceError::UnknownScenario(_) | ServiceError::UnknownJob(_) => {
                StatusCode::NOT_FOUND
            }
            ServiceError::Busy(_) => StatusCode::CONFLICT,
            ServiceError::Invalid(_) => StatusCode::UNPROCESSABLE_ENTITY,
            ServiceError::Backend(_) => StatusCode::BAD_GATEWAY,
            ServiceError::Internal(_) => StatusCode::INTERNAL_SERVER_ERROR,
        }
    }

    pub(crate) fn internal(e: impl std::fmt::Display) -> Self {
        ServiceError::Internal(e.to_string())
    }
}

impl From<AgentError> for ServiceError {
    fn from(e: AgentError) -> Self {
        match &e {
            AgentError::Task(t) => match t.kind {
                TaskErrorKind::InvalidInput(_) => ServiceError::Invalid(e.to_string()),
                TaskErrorKind::DelegationCycle { .. } => ServiceError::Internal(e.to_string()),
                _ => ServiceError::Backend(e.to_string()),
            },
            AgentError::EmptyInput(_) | AgentError::NoPriorResponse | AgentError::NoUsers => {
                ServiceError::Invalid(e.to_string())
            }
            AgentError::Store(_) => ServiceError::Internal(e.to_string()),
        }
    }
}

impl IntoResponse for ServiceError {
    fn into_response(self) -> Response {
        if self.status().is_server_error() {
            tracing::warn!(error = %self, "request failed");
        }
        (self.status(), Json(json!({ "error": self.to_string() }))).into_response()
    }
}
