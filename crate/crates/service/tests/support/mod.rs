#![allow(dead_code)]

use std::path::Path;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Arc;
use std::time::Duration;

use axum::body::Body;
use axum::http::{Request, StatusCode};
use axum::Router;
use mup_agents::reference_backend;
use mup_llm::{ChatBackend, LlmError, Message};
use mup_service::{backend_factory, router, AppState, BackendFactory, ServiceConfig};
use serde_json::Value;
use tower::ServiceExt;

pub const CARE_QUERY: &str = "Provide me with your caretaking tasks for Monday";

/// Reference replay, optionally slowed down, counting every completion.
pub struct Probe {
    inner: Arc<dyn ChatBackend>,
    delay: Duration,
    calls: Arc<AtomicUsize>,
}

impl ChatBackend for Probe {
    fn chat(&self, messages: &[Message]) -> Result<String, LlmError> {
        self.calls.fetch_add(1, Ordering::SeqCst);
        std::thread::sleep(self.delay);
        self.inner.chat(messages)
    }
}

pub fn probing(delay: Duration, calls: Arc<AtomicUsize>) -> BackendFactory {
    Arc::new(move |scenario, _| {
        Ok(Arc::new(Probe { inner: reference_backend(scenario.clone()), delay, calls: calls.clone() })
            as Arc<dyn ChatBackend>)
    })
}

pub fn state_with(dir: &Path, backends: BackendFactory) -> AppState {
    AppState::open(ServiceConfig::new(dir, backends)).unwrap()
}

pub fn reference_state(dir: &Path) -> AppState {
    state_with(dir, backend_factory(&Default::default()).unwrap())
}

pub fn app(state: &AppState) -> Router {
    router(state.clone())
}

pub async fn call(app: &Router, method: &str, uri: &str, body: Option<Value>) -> (StatusCode, Value) {
    let mut req = Request::builder().method(method).uri(uri);
    let body = match body {
        Some(v) => {
            req = req.header("content-type", "application/json");
            Body::from(v.to_string())
        }
        None => Body::empty(),
    };
    let resp = app.clone().oneshot(req.body(body).unwrap()).await.unwrap();
    let status = resp.status();
    let bytes = axum::body::to_bytes(resp.into_body(), usize::MAX).await.unwrap();
    let value = if bytes.is_empty() { Value::Null } else { serde_json::from_slice(&bytes).unwrap() };
    (status, value)
}

pub async fn new_session(app: &Router, scenario: &str) -> String {
    let (status, body) = call(app, "POST", &format!("/api/scenarios/{scenario}/sessions"), None).await;
    assert_eq!(status, StatusCode::CREATED, "{body}");
    body["session_id"].as_str().unwrap().to_string()
}
