use std::collections::HashMap;
use std::sync::Mutex;

use sha2::{Digest, Sha256};

use crate::{LlmError, Message};

/// Something that turns a conversation into a raw reply.
pub trait ChatBackend: Send + Sync {
    fn chat(&self, messages: &[Message]) -> Result<String, LlmError>;
}

/// Hex SHA-256 of the canonical JSON of a message sequence.
pub fn prompt_hash(messages: &[Message]) -> String {
    let json = serde_json::to_vec(messages).expect("messages serialize");
    Sha256::digest(json).iter().map(|b| format!("{b:02x}")).collect()
}

/// Replies looked up by prompt hash.
#[derive(Debug, Clone, Default)]
pub struct ScriptedBackend {
    replies: HashMap<String, String>,
}

impl ScriptedBackend {
    pub fn new(replies: HashMap<String, String>) -> Self {
        Self { replies }
    }

    pub fn insert(&mut self, messages: &[Message], reply: impl Into<String>) {
        self.replies.insert(prompt_hash(messages), reply.into());
    }
}

impl ChatBackend for ScriptedBackend {
    fn chat(&self, messages: &[Message]) -> Result<String, LlmError> {
        let hash = prompt_hash(messages);
        self.replies.get(&hash).cloned().ok_or(LlmError::ScriptMiss(hash))
    }
}

/// Replies handed out in order, regardless of the prompt.
#[derive(Debug, Default)]
pub struct SequenceBackend {
    replies: Vec<String>,
    next: Mutex<usize>,
}

impl SequenceBackend {
    pub fn new<S: Into<String>>(replies: impl IntoIterator<Item = S>) -> Self {
        Self { replies: replies.into_iter().map(Into::into).collect(), next: Mutex::new(0) }
    }

    /// Replies consumed so far.
    pub fn calls(&self) -> usize {
        *self.next.lock().unwrap()
    }
}

impl ChatBackend for SequenceBackend {
    fn chat(&self, _: &[Message]) -> Result<String, LlmError> {
        let mut next = self.next.lock().unwrap();
        let reply = self.replies.get(*next).cloned().ok_or(LlmError::ScriptExhausted(self.replies.len()))?;
        *next += 1;
        Ok(reply)
    }
}

/// Replies computed by a pure function of the conversation.
pub struct FnBackend<F>(pub F);

impl<F> ChatBackend for FnBackend<F>
where
    F: Fn(&[Message]) -> Result<String, LlmError> + Send + Sync,
{
    fn chat(&self, messages: &[Message]) -> Result<String, LlmError> {
        (self.0)(messages)
    }
}
