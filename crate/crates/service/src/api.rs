use axum::body::Bytes;
use axum::extract::{Path, State};
use axum::http::StatusCode;
use axum::routing::{get, post};
use axum::{Json, Router};
use mup_agents::{Condition, PlannerOutput, RuleSheet};
use mup_core::scenarios::bundled;
use mup_eval::EvalConfig;
use mup_llm::TraceEvent;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::journal::JournalEntry;
use crate::state::{AppState, JobStatus, SessionInfo};
use crate::ServiceError;

type ApiResult<T> = Result<T, ServiceError>;

/// Every API route. CORS and other layers are added by the caller.
pub fn router(state: AppState) -> Router {
    Router::new()
        .route("/healthz", get(healthz))
        .route("/api/scenarios", get(list_scenarios))
        .route("/api/scenarios/{name}/sessions", post(create_session))
        .route("/api/sessions", get(list_sessions))
        .route("/api/sessions/{id}", get(session_info))
        .route("/api/sessions/{id}/messages", post(post_message))
        .route("/api/sessions/{id}/feedback", post(post_feedback))
        .route("/api/sessions/{id}/rulesheet", get(rulesheet))
        .route("/api/sessions/{id}/plan", get(plan))
        .route("/api/sessions/{id}/trace", get(trace))
        .route("/api/eval/run", post(run_eval))
        .route("/api/eval/{job_id}", get(eval_job))
        .with_state(state)
}

async fn healthz() -> Json<Value> {
    Json(json!({ "status": "ok" }))
}

#[derive(Serialize)]
struct ScenarioSummary {
    slug: String,
    name: String,
    description: String,
    users: Vec<String>,
}

async fn list_scenarios() -> Json<Vec<ScenarioSummary>> {
    Json(
        bundled()
            .into_iter()
            .map(|s| ScenarioSummary {
                users: s.users.iter().map(|u| u.first_name.clone()).collect(),
                slug: s.slug,
                name: s.name,
                description: s.description,
            })
            .collect(),
    )
}

#[derive(Debug, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
struct CreateSession {
    condition: Option<Condition>,
}

/// Decodes a JSON body; an empty body means `T::default()` when `empty` is
/// given. Every rejection is a JSON `{error}` with status 422.
fn parse<T: serde::de::DeserializeOwned>(body: &Bytes, empty: Option<T>) -> ApiResult<T> {
    match empty {
        Some(default) if body.iter().all(u8::is_ascii_whitespace) => Ok(default),
        _ => serde_json::from_slice(body).map_err(|e| ServiceError::Invalid(format!("request body: {e}"))),
    }
}

async fn blocking<T: Send + 'static>(f: impl FnOnce() -> ApiResult<T> + Send + 'static) -> ApiResult<T> {
    tokio::task::spawn_blocking(f).await.map_err(ServiceError::internal)?
}

async fn create_session(
    State(state): State<AppState>,
    Path(name): Path<String>,
    body: Bytes,
) -> ApiResult<(StatusCode, Json<SessionInfo>)> {
    let req: CreateSession = parse(&body, Some(CreateSession::default()))?;
    let condition = req.condition.unwrap_or(Condition::MultiAgent);
    let info = blocking(move || state.create_session(&name, condition)).await?;
    tracing::info!(session = %info.session_id, scenario = %info.scenario, "created session");
    Ok((StatusCode::CREATED, Json(info)))
}

async fn list_sessions(State(state): State<AppState>) -> Json<Vec<SessionInfo>> {
    Json(state.sessions())
}

async fn session_info(State(state): State<AppState>, Path(id): Path<String>) -> ApiResult<Json<SessionInfo>> {
    Ok(Json(state.session(&id)?.info()))
}

#[derive(Debug, Deserialize)]
struct TextBody {
    text: String,
}

/// Runs one turn with the session lock held; a second request while one is
/// in flight is refused rather than queued.
async fn turn(state: AppState, id: String, entry: JournalEntry) -> ApiResult<Json<PlannerOutput>> {
    let slot = state.session(&id)?;
    let mut live = slot.live.clone().try_lock_owned().map_err(|_| ServiceError::Busy(id))?;
    let out = blocking(move || slot.handle(&mut live, entry)).await?;
    Ok(Json(out))
}

async fn post_message(
    State(state): State<AppState>,
    Path(id): Path<String>,
    body: Bytes,
) -> ApiResult<Json<PlannerOutput>> {
    let body: TextBody = parse(&body, None)?;
    turn(state, id, JournalEntry::Message { text: body.text }).await
}

async fn post_feedback(
    State(state): State<AppState>,
    Path(id): Path<String>,
    body: Bytes,
) -> ApiResult<Json<PlannerOutput>> {
    let body: TextBody = parse(&body, None)?;
    turn(state, id, JournalEntry::Feedback { text: body.text }).await
}

async fn rulesheet(State(state): State<AppState>, Path(id): Path<String>) -> ApiResult<Json<RuleSheet>> {
    Ok(Json(state.session(&id)?.sheet()))
}

/// The last planner output, or an empty one before the first message.
async fn plan(State(state): State<AppState>, Path(id): Path<String>) -> ApiResult<Json<PlannerOutput>> {
    Ok(Json(state.session(&id)?.last_output().unwrap_or_default()))
}

async fn trace(State(state): State<AppState>, Path(id): Path<String>) -> ApiResult<Json<Vec<TraceEvent>>> {
    Ok(Json(state.session(&id)?.trace()))
}

async fn run_eval(State(state): State<AppState>, body: Bytes) -> ApiResult<(StatusCode, Json<Value>)> {
    let config: EvalConfig = parse(&body, Some(EvalConfig::default()))?;
    let job_id = state.start_eval(config)?;
    Ok((StatusCode::ACCEPTED, Json(json!({ "job_id": job_id }))))
}

async fn eval_job(State(state): State<AppState>, Path(job_id): Path<String>) -> ApiResult<Json<JobStatus>> {
    Ok(Json(state.job(&job_id)?))
}
