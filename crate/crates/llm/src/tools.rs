use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::{LlmError, ToolCall};

/// A tool an agent may call by replying with `{"tool": "<name>", ...}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ToolSchema {
    pub tool_name: String,
    /// JSON schema of the payload (the reply object without its `tool` key).
    pub schema: Value,
    /// Usage text injected into the agent's system prompt.
    pub instructions: String,
}

impl ToolSchema {
    pub fn new(tool_name: impl Into<String>, schema: Value, instructions: impl Into<String>) -> Self {
        Self { tool_name: tool_name.into(), schema, instructions: instructions.into() }
    }

    /// Prompt fragment describing the tool.
    pub fn prompt_text(&self) -> String {
        format!(
            "Tool `{}`: {}\nReply with a single JSON object {{\"tool\": \"{}\", ...}} whose other fields match this schema:\n{}",
            self.tool_name,
            self.instructions.trim(),
            self.tool_name,
            self.schema
        )
    }
}

/// Strips an optional Markdown code fence around a reply.
fn unfence(raw: &str) -> &str {
    let t = raw.trim();
    let Some(rest) = t.strip_prefix("```") else { return t };
    let rest = rest.strip_prefix("json").unwrap_or(rest);
    rest.strip_suffix("```").unwrap_or(rest).trim()
}

/// Interprets `raw` as a call of one of `tools`. Returns `Ok(None)` for free
/// text, including JSON that names no registered tool.
pub fn parse_tool_call(raw: &str, tools: &[ToolSchema]) -> Result<Option<ToolCall>, LlmError> {
    let Ok(Value::Object(mut obj)) = serde_json::from_str::<Value>(unfence(raw)) else {
        return Ok(None);
    };
    let Some(Value::String(name)) = obj.get("tool").cloned() else {
        return Ok(None);
    };
    let Some(tool) = tools.iter().find(|t| t.tool_name == name) else {
        return Ok(None);
    };
    obj.remove("tool");
    let payload = Value::Object(obj);
    let malformed = |path: String, message: String| LlmError::MalformedToolPayload {
        tool_name: name.clone(),
        path,
        message,
        raw: raw.to_string(),
    };
    let validator = jsonschema::validator_for(&tool.schema)
        .map_err(|e| malformed(String::new(), format!("invalid tool schema: {e}")))?;
    if let Some(err) = validator.iter_errors(&payload).next() {
        return Err(malformed(err.instance_path().to_string(), err.to_string()));
    }
    Ok(Some(ToolCall { tool_name: name, payload }))
}
