use crate::tools::parse_tool_call;
use crate::{ChatBackend, LlmError, Message, Role, ToolSchema};

/// Sends `messages` to `backend` and interprets the reply. A reply that is a
/// valid call of one of `tools` comes back as an assistant message carrying
/// the parsed [`crate::ToolCall`]; anything else is free text.
pub fn complete(backend: &dyn ChatBackend, messages: &[Message], tools: &[ToolSchema]) -> Result<Message, LlmError> {
    match messages.first() {
        None => return Err(LlmError::BadRequest("no messages".into())),
        Some(m) if m.role != Role::System => {
            return Err(LlmError::BadRequest("first message must be the system prompt".into()))
        }
        _ => {}
    }
    if let Some(i) = messages.iter().position(|m| !m.is_well_formed()) {
        return Err(LlmError::BadRequest(format!("message {i} is a tool result without its call")));
    }
    let mut names: Vec<&str> = tools.iter().map(|t| t.tool_name.as_str()).collect();
    names.sort_unstable();
    if names.windows(2).any(|w| w[0] == w[1]) {
        return Err(LlmError::BadRequest("duplicate tool name".into()));
    }
    let raw = backend.chat(messages)?;
    let tool_call = parse_tool_call(&raw, tools)?;
    Ok(Message { role: Role::Assistant, content: raw, tool_call })
}
