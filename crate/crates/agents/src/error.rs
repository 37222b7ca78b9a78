use mup_docstore::StoreError;
use mup_llm::orchestrator::TaskError;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum AgentError {
    #[error(transparent)]
    Task(#[from] TaskError),
    #[error("{0} must not be empty")]
    EmptyInput(&'static str),
    #[error("feedback needs a previous planner response in this session")]
    NoPriorResponse,
    #[error("document store: {0}")]
    Store(String),
    #[error("scenario has no users")]
    NoUsers,
}

impl From<StoreError> for AgentError {
    fn from(e: StoreError) -> Self {
        AgentError::Store(e.to_string())
    }
}
