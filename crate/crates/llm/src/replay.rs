use std::path::Path;
use std::sync::Mutex;

use serde::{Deserialize, Serialize};

use crate::{prompt_hash, ChatBackend, LlmError, Message};

/// One line of a recording file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RecordedTurn {
    /// 1-based position in the session.
    pub turn: usize,
    pub request_hash: String,
    pub messages: Vec<Message>,
    pub response: String,
}

/// Wraps a backend and records every successful exchange.
pub struct Recorder<B> {
    inner: B,
    turns: Mutex<Vec<RecordedTurn>>,
}

impl<B: ChatBackend> Recorder<B> {
    pub fn new(inner: B) -> Self {
        Self { inner, turns: Mutex::new(Vec::new()) }
    }

    pub fn turns(&self) -> Vec<RecordedTurn> {
        self.turns.lock().unwrap().clone()
    }

    /// The recording as newline-delimited JSON.
    pub fn to_jsonl(&self) -> String {
        self.turns.lock().unwrap().iter().map(|t| serde_json::to_string(t).expect("turn serializes") + "\n").collect()
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<(), LlmError> {
        std::fs::write(path, self.to_jsonl()).map_err(|e| LlmError::Io(e.to_string()))
    }
}

impl<B: ChatBackend> ChatBackend for Recorder<B> {
    fn chat(&self, messages: &[Message]) -> Result<String, LlmError> {
        let response = self.inner.chat(messages)?;
        let mut turns = self.turns.lock().unwrap();
        let turn = turns.len() + 1;
        turns.push(RecordedTurn {
            turn,
            request_hash: prompt_hash(messages),
            messages: messages.to_vec(),
            response: response.clone(),
        });
        Ok(response)
    }
}

/// Plays a recording back, insisting the conversation matches it exactly.
#[derive(Debug)]
pub struct ReplayBackend {
    turns: Vec<RecordedTurn>,
    next: Mutex<usize>,
}

impl ReplayBackend {
    pub fn new(turns: Vec<RecordedTurn>) -> Self {
        Self { turns, next: Mutex::new(0) }
    }

    pub fn from_jsonl(text: &str) -> Result<Self, LlmError> {
        let turns = text
            .lines()
            .enumerate()
            .filter(|(_, l)| !l.trim().is_empty())
            .map(|(i, l)| serde_json::from_str(l).map_err(|e| LlmError::Io(format!("recording line {}: {e}", i + 1))))
            .collect::<Result<_, _>>()?;
        Ok(Self::new(turns))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, LlmError> {
        let text = std::fs::read_to_string(path).map_err(|e| LlmError::Io(e.to_string()))?;
        Self::from_jsonl(&text)
    }
}

impl ChatBackend for ReplayBackend {
    fn chat(&self, messages: &[Message]) -> Result<String, LlmError> {
        let mut next = self.next.lock().unwrap();
        let turn = *next + 1;
        let Some(rec) = self.turns.get(*next) else {
            return Err(LlmError::ReplayMismatch {
                turn,
                reason: format!("recording has only {} turns", self.turns.len()),
            });
        };
        if rec.request_hash != prompt_hash(messages) {
            let reason = match rec.messages.iter().zip(messages).position(|(a, b)| a != b) {
                Some(i) => format!("message {i} differs from the recording"),
                None => format!("{} messages sent, {} recorded", messages.len(), rec.messages.len()),
            };
            return Err(LlmError::ReplayMismatch { turn, reason });
        }
        *next += 1;
        Ok(rec.response.clone())
    }
}
