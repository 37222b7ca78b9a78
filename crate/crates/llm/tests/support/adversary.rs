//! Adversarial scripted agents shared by the orchestrator tests and the
//! acceptance gate.
#![allow(dead_code)]

use mup_llm::orchestrator::*;
use mup_llm::*;
use serde_json::json;

pub fn calc_tool() -> ToolSchema {
    ToolSchema::new(
        "calc",
        json!({"type":"object","required":["expr"],"properties":{"expr":{"type":"string"}}}),
        "Evaluate an arithmetic expression.",
    )
}

pub struct Calc;
impl ToolHandler for Calc {
    fn handle(&mut self, _: &ToolCall, _: &mut TaskCx<'_>) -> Result<ToolOutcome, TaskError> {
        Ok(ToolOutcome::Reply("42".into()))
    }
}

/// Replies drawn from a fixed adversarial menu: chatter, broken JSON,
/// schema violations, unknown tools, and occasional valid calls.
pub fn adversary(seed: u64) -> impl Fn(&[Message]) -> Result<String, LlmError> + Send + Sync {
    move |history: &[Message]| {
        let menu = [
            "I am still working on it.",
            r#"{"tool":"calc""#,
            r#"{"tool":"calc","expr":7}"#,
            r#"{"tool":"nope","expr":"1"}"#,
            r#"{"tool":"calc","expr":"1+1"}"#,
            "```json\n{\"tool\":\"calc\"}\n```",
        ];
        let i = (seed as usize).wrapping_mul(31).wrapping_add(history.len() * 7) % menu.len();
        Ok(menu[i].to_string())
    }
}
