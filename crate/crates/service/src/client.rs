use std::fmt::Write as _;
use std::time::Duration;

use mup_agents::{Condition, PlannerOutput, RuleSheet};
use mup_core::model::{clock, Outcome};
use serde::de::DeserializeOwned;
use serde_json::{json, Value};

use crate::SessionInfo;

#[derive(Debug, thiserror::Error)]
pub enum ClientError {
    #[error("cannot reach the service: {0}")]
    Transport(#[from] reqwest::Error),
    #[error("service answered {status}: {message}")]
    Api { status: u16, message: String },
}

/// Blocking client for the HTTP API.
pub struct ApiClient {
    base: String,
    http: reqwest::blocking::Client,
}

impl ApiClient {
    pub fn new(base: impl Into<String>) -> Result<Self, ClientError> {
        let http = reqwest::blocking::Client::builder().timeout(Duration::from_secs(600)).build()?;
        Ok(Self { base: base.into().trim_end_matches('/').to_string(), http })
    }

    fn decode<T: DeserializeOwned>(resp: reqwest::blocking::Response) -> Result<T, ClientError> {
        let status = resp.status();
        if status.is_success() {
            return Ok(resp.json()?);
        }
        let body: Value = resp.json().unwrap_or(Value::Null);
        let message = body["error"].as_str().unwrap_or("no detail").to_string();
        Err(ClientError::Api { status: status.as_u16(), message })
    }

    fn get<T: DeserializeOwned>(&self, path: &str) -> Result<T, ClientError> {
        Self::decode(self.http.get(format!("{}{path}", self.base)).send()?)
    }

    fn post<T: DeserializeOwned>(&self, path: &str, body: Value) -> Result<T, ClientError> {
        Self::decode(self.http.post(format!("{}{path}", self.base)).json(&body).send()?)
    }

    pub fn create_session(&self, scenario: &str, condition: Condition) -> Result<SessionInfo, ClientError> {
        let info: Value =
            self.post(&format!("/api/scenarios/{scenario}/sessions"), json!({ "condition": condition }))?;
        Ok(SessionInfo {
            session_id: info["session_id"].as_str().unwrap_or_default().into(),
            scenario: info["scenario"].as_str().unwrap_or_default().into(),
            condition,
            created_at: info["created_at"].as_u64().unwrap_or_default(),
            turns: 0,
        })
    }

    pub fn message(&self, session: &str, text: &str) -> Result<PlannerOutput, ClientError> {
        self.post(&format!("/api/sessions/{session}/messages"), json!({ "text": text }))
    }

    pub fn feedback(&self, session: &str, text: &str) -> Result<PlannerOutput, ClientError> {
        self.post(&format!("/api/sessions/{session}/feedback"), json!({ "text": text }))
    }

    pub fn rulesheet(&self, session: &str) -> Result<RuleSheet, ClientError> {
        self.get(&format!("/api/sessions/{session}/rulesheet"))
    }

    pub fn plan(&self, session: &str) -> Result<PlannerOutput, ClientError> {
        self.get(&format!("/api/sessions/{session}/plan"))
    }
}

/// Plain-text rendering of a planner output for terminals.
pub fn render_output(out: &PlannerOutput) -> String {
    let mut s = String::new();
    for (day, plan) in &out.plans {
        let _ = writeln!(s, "{}", day.full_name());
        if plan.actions.is_empty() {
            let _ = writeln!(s, "  (nothing planned)");
        }
        for a in &plan.actions {
            let users: Vec<&str> = a.users.iter().map(|u| u.as_str()).collect();
            let _ = write!(s, "  {}-{}  {}  [{}]", clock(a.start), clock(a.end), a.description, users.join(", "));
            if let Some(r) = &a.resource {
                let _ = write!(s, " @ {r}");
            }
            if a.escalated {
                let _ = write!(s, " (for discussion)");
            }
            s.push('\n');
        }
    }
    if !out.resolutions.is_empty() {
        let _ = writeln!(s, "Resolutions");
        for r in &out.resolutions {
            let outcome = match &r.outcome {
                Outcome::Winner { user, .. } => format!("{user} goes first"),
                Outcome::Escalated => "escalated for discussion".into(),
            };
            let _ = writeln!(s, "  {}: {outcome}", r.conflict_id);
        }
    }
    for u in &out.unresolved_fields {
        let _ = writeln!(s, "Could not find {}'s {} after {} attempts", u.user, u.field, u.attempts);
    }
    for v in &out.feedback_violations {
        let _ = writeln!(s, "Still unmet: {v}");
    }
    if let Some(e) = &out.explanation {
        let _ = writeln!(s, "\n{e}");
    }
    s
}
