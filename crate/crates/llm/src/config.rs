use std::collections::HashMap;
use std::path::PathBuf;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::{ChatBackend, LlmError, RemoteBackend, RemoteConfig, ReplayBackend, ScriptedBackend};

/// Where completions come from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "variant", rename_all = "snake_case")]
pub enum BackendConfig {
    Remote(RemoteConfig),
    /// JSON object mapping prompt hash to reply.
    Scripted {
        script: PathBuf,
    },
    /// Newline-delimited recording written by [`crate::Recorder`].
    Replay {
        recording: PathBuf,
    },
}

pub fn build_backend(config: &BackendConfig) -> Result<Arc<dyn ChatBackend>, LlmError> {
    Ok(match config {
        BackendConfig::Remote(c) => Arc::new(RemoteBackend::new(c.clone())?),
        BackendConfig::Scripted { script } => {
            let text =
                std::fs::read_to_string(script).map_err(|e| LlmError::Io(format!("{}: {e}", script.display())))?;
            let replies: HashMap<String, String> =
                serde_json::from_str(&text).map_err(|e| LlmError::Io(format!("{}: {e}", script.display())))?;
            Arc::new(ScriptedBackend::new(replies))
        }
        BackendConfig::Replay { recording } => Arc::new(ReplayBackend::load(recording)?),
    })
}
