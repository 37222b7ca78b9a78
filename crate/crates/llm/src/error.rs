#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum LlmError {
    #[error("invalid request: {0}")]
    BadRequest(String),
    #[error("backend unavailable: {0}")]
    BackendUnavailable(String),
    #[error("rate limited after {retries} retries")]
    RateLimited { retries: u32 },
    #[error("backend returned a malformed response: {0}")]
    BadResponse(String),
    #[error("malformed `{tool_name}` payload at `{path}`: {message}")]
    MalformedToolPayload {
        tool_name: String,
        /// JSON pointer of the offending value; empty for the root.
        path: String,
        message: String,
        /// The raw reply, kept so the orchestrator can record it.
        raw: String,
    },
    #[error("no scripted reply for prompt {0}")]
    ScriptMiss(String),
    #[error("script exhausted after {0} replies")]
    ScriptExhausted(usize),
    #[error("replay diverged at turn {turn}: {reason}")]
    ReplayMismatch { turn: usize, reason: String },
    #[error("{0}")]
    Io(String),
}
