use std::time::Duration;

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::{ChatBackend, LlmError, Message, Role};

fn default_temperature() -> f64 {
    0.0
}
fn default_timeout_ms() -> u64 {
    60_000
}
fn default_max_retries() -> u32 {
    3
}
fn default_backoff_ms() -> u64 {
    500
}

/// Settings for an OpenAI-compatible `/chat/completions` endpoint.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RemoteConfig {
    /// Base URL, e.g. `https://api.openai.com/v1`.
    pub endpoint: String,
    pub model: String,
    /// Name of the environment variable holding the API key.
    #[serde(default)]
    pub api_key_env: Option<String>,
    #[serde(default = "default_temperature")]
    pub temperature: f64,
    #[serde(default = "default_timeout_ms")]
    pub timeout_ms: u64,
    #[serde(default = "default_max_retries")]
    pub max_retries: u32,
    /// Base delay of the exponential backoff used when no Retry-After is sent.
    #[serde(default = "default_backoff_ms")]
    pub backoff_ms: u64,
}

impl RemoteConfig {
    pub fn new(endpoint: impl Into<String>, model: impl Into<String>) -> Self {
        Self {
            endpoint: endpoint.into(),
            model: model.into(),
            api_key_env: None,
            temperature: default_temperature(),
            timeout_ms: default_timeout_ms(),
            max_retries: default_max_retries(),
            backoff_ms: default_backoff_ms(),
        }
    }
}

pub struct RemoteBackend {
    config: RemoteConfig,
    api_key: Option<String>,
    client: reqwest::blocking::Client,
}

impl RemoteBackend {
    /// Builds the client and resolves the API key from the environment.
    pub fn new(config: RemoteConfig) -> Result<Self, LlmError> {
        let api_key = match &config.api_key_env {
            Some(var) => Some(
                std::env::var(var)
                    .map_err(|_| LlmError::BackendUnavailable(format!("environment variable {var} is not set")))?,
            ),
            None => None,
        };
        let client = reqwest::blocking::Client::builder()
            .timeout(Duration::from_millis(config.timeout_ms))
            .build()
            .map_err(|e| LlmError::BackendUnavailable(e.to_string()))?;
        Ok(Self { config, api_key, client })
    }

    /// Wire form of the conversation. Tool calls travel as plain assistant
    /// JSON and tool results as user turns, so no vendor function-calling
    /// support is needed.
    fn wire_messages(messages: &[Message]) -> Vec<Value> {
        messages
            .iter()
            .map(|m| match (m.role, &m.tool_call) {
                (Role::Tool, Some(call)) => json!({
                    "role": "user",
                    "content": format!("[result of tool `{}`]\n{}", call.tool_name, m.content),
                }),
                (role, _) => json!({ "role": role.to_string(), "content": m.content }),
            })
            .collect()
    }

    fn backoff(&self, attempt: u32, retry_after: Option<Duration>) -> Duration {
        retry_after
            .unwrap_or_else(|| Duration::from_millis(self.config.backoff_ms.saturating_mul(1 << attempt.min(16))))
            .min(Duration::from_secs(120))
    }
}

impl ChatBackend for RemoteBackend {
    fn chat(&self, messages: &[Message]) -> Result<String, LlmError> {
        let url = format!("{}/chat/completions", self.config.endpoint.trim_end_matches('/'));
        let body = json!({
            "model": self.config.model,
            "temperature": self.config.temperature,
            "messages": Self::wire_messages(messages),
        });
        let mut attempt = 0;
        loop {
            let mut req = self.client.post(&url).json(&body);
            if let Some(key) = &self.api_key {
                req = req.bearer_auth(key);
            }
            let resp = req.send().map_err(|e| LlmError::BackendUnavailable(e.to_string()))?;
            let status = resp.status();
            if status.as_u16() == 429 {
                if attempt >= self.config.max_retries {
                    return Err(LlmError::RateLimited { retries: attempt });
                }
                let retry_after = resp
                    .headers()
                    .get(reqwest::header::RETRY_AFTER)
                    .and_then(|v| v.to_str().ok())
                    .and_then(|v| v.trim().parse::<f64>().ok())
                    .filter(|s| s.is_finite() && *s >= 0.0)
                    .map(Duration::from_secs_f64);
                std::thread::sleep(self.backoff(attempt, retry_after));
                attempt += 1;
                continue;
            }
            if !status.is_success() {
                let text = resp.text().unwrap_or_default();
                return Err(LlmError::BackendUnavailable(format!("HTTP {status}: {}", text.trim())));
            }
            let value: Value = resp.json().map_err(|e| LlmError::BadResponse(e.to_string()))?;
            return value["choices"][0]["message"]["content"]
                .as_str()
                .map(str::to_string)
                .ok_or_else(|| LlmError::BadResponse("no choices[0].message.content".into()));
        }
    }
}
