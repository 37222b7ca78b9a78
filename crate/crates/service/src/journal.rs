use std::collections::VecDeque;
use std::fs::{File, OpenOptions};
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};
use std::sync::{Arc, Mutex};

use mup_agents::Condition;
use mup_llm::{prompt_hash, ChatBackend, LlmError, Message, RecordedTurn};
use serde::{Deserialize, Serialize};

/// One line of a session journal.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "event", rename_all = "snake_case")]
pub enum JournalEntry {
    Created {
        session_id: String,
        scenario: String,
        condition: Condition,
        /// Seconds since the Unix epoch.
        created_at: u64,
    },
    Message {
        text: String,
    },
    Feedback {
        text: String,
    },
}

/// Append-only JSON-lines file.
pub(crate) struct Journal {
    file: File,
}

impl Journal {
    pub fn create(path: &Path) -> std::io::Result<Self> {
        let file = OpenOptions::new().create(true).append(true).open(path)?;
        Ok(Self { file })
    }

    pub fn append(&mut self, entry: &JournalEntry) -> std::io::Result<()> {
        let mut line = serde_json::to_string(entry).expect("journal entry serializes");
        line.push('\n');
        self.file.write_all(line.as_bytes())?;
        self.file.flush()
    }
}

pub(crate) fn read_lines<T: for<'de> Deserialize<'de>>(path: &Path) -> std::io::Result<Vec<T>> {
    let file = match File::open(path) {
        Ok(f) => f,
        Err(e) if e.kind() == std::io::ErrorKind::NotFound => return Ok(Vec::new()),
        Err(e) => return Err(e),
    };
    let mut out = Vec::new();
    for (i, line) in BufReader::new(file).lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let value = serde_json::from_str(&line).map_err(|e| {
            std::io::Error::new(std::io::ErrorKind::InvalidData, format!("{}:{}: {e}", path.display(), i + 1))
        })?;
        out.push(value);
    }
    Ok(out)
}

struct Turns {
    served: Vec<RecordedTurn>,
    pending: VecDeque<RecordedTurn>,
}

/// Records every completion of a session in the gateway's recording format.
/// Turns already on disk are served back while the conversation follows
/// them, so replaying a journal after a restart reproduces the session
/// without calling the backend again.
pub(crate) struct RecordingBackend {
    inner: Arc<dyn ChatBackend>,
    path: PathBuf,
    turns: Mutex<Turns>,
}

impl RecordingBackend {
    pub fn open(inner: Arc<dyn ChatBackend>, path: PathBuf) -> std::io::Result<Self> {
        let pending: VecDeque<RecordedTurn> = read_lines(&path)?.into();
        Ok(Self { inner, path, turns: Mutex::new(Turns { served: Vec::new(), pending }) })
    }

    fn persist(&self, turns: &mut Turns, turn: RecordedTurn, diverged: bool) -> Result<(), LlmError> {
        let io = |e: std::io::Error| LlmError::Io(format!("{}: {e}", self.path.display()));
        turns.served.push(turn);
        if diverged {
            let body: String =
                turns.served.iter().map(|t| serde_json::to_string(t).expect("turn serializes") + "\n").collect();
            std::fs::write(&self.path, body).map_err(io)
        } else {
            let line = serde_json::to_string(turns.served.last().unwrap()).expect("turn serializes") + "\n";
            let mut f = OpenOptions::new().create(true).append(true).open(&self.path).map_err(io)?;
            f.write_all(line.as_bytes()).map_err(io)
        }
    }
}

impl ChatBackend for RecordingBackend {
    fn chat(&self, messages: &[Message]) -> Result<String, LlmError> {
        let hash = prompt_hash(messages);
        let mut turns = self.turns.lock().unwrap();
        let diverged = match turns.pending.pop_front() {
            Some(next) if next.request_hash == hash => {
                let response = next.response.clone();
                turns.served.push(next);
                return Ok(response);
            }
            Some(_) => {
                turns.pending.clear();
                true
            }
            None => false,
        };
        let response = self.inner.chat(messages)?;
        let turn = RecordedTurn {
            turn: turns.served.len() + 1,
            request_hash: hash,
            messages: messages.to_vec(),
            response: response.clone(),
        };
        self.persist(&mut turns, turn, diverged)?;
        Ok(response)
    }
}
