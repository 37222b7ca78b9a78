use mup_agents::{AgentConfig, Condition, TruncatingBackend};
use mup_core::model::Weekday;
use mup_llm::BackendConfig;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "variant", rename_all = "snake_case")]
pub enum EvalBackend {
    /// The reference-replay responder. The single-agent condition sees only
    /// the first `keep` fraction of the inlined documents when
    /// `truncate_monolithic` is set.
    Reference {
        #[serde(default = "yes")]
        truncate_monolithic: bool,
        #[serde(default = "default_keep")]
        keep: f64,
    },
    /// A configured chat backend; every agent shares it.
    Live { config: BackendConfig },
}

fn yes() -> bool {
    true
}

fn default_keep() -> f64 {
    TruncatingBackend::DEFAULT_KEEP
}

impl Default for EvalBackend {
    fn default() -> Self {
        EvalBackend::Reference { truncate_monolithic: true, keep: default_keep() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct EvalConfig {
    /// Bundled scenario names or scenario file paths; `all` means every
    /// bundled scenario.
    pub scenarios: Vec<String>,
    pub conditions: Vec<Condition>,
    pub trials: u32,
    pub weekdays: Vec<Weekday>,
    pub backend: EvalBackend,
    pub agents: AgentConfig,
}

impl Default for EvalConfig {
    fn default() -> Self {
        Self {
            scenarios: vec!["all".into()],
            conditions: Condition::ALL.to_vec(),
            trials: 3,
            weekdays: Weekday::WORKWEEK.to_vec(),
            backend: EvalBackend::default(),
            agents: AgentConfig::default(),
        }
    }
}

impl EvalConfig {
    pub fn validate(&self) -> Result<(), EvalError> {
        if self.trials == 0 {
            return Err(EvalError::NoTrials);
        }
        if self.weekdays.is_empty() {
            return Err(EvalError::Empty("weekdays"));
        }
        if self.scenarios.is_empty() {
            return Err(EvalError::Empty("scenarios"));
        }
        if self.conditions.is_empty() {
            return Err(EvalError::Empty("conditions"));
        }
        Ok(())
    }
}

#[derive(Debug, thiserror::Error)]
pub enum EvalError {
    #[error("trials must be at least 1")]
    NoTrials,
    #[error("no {0} to evaluate")]
    Empty(&'static str),
    #[error(transparent)]
    Scenario(#[from] mup_core::scenarios::ScenarioError),
    #[error("ingesting {scenario}: {source}")]
    Store {
        scenario: String,
        #[source]
        source: mup_docstore::StoreError,
    },
    #[error("backend: {0}")]
    Backend(#[from] mup_llm::LlmError),
    #[error("plan validation: {0}")]
    Check(#[from] mup_core::conflict::CheckError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}
