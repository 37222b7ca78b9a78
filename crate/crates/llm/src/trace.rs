use std::fs::File;
use std::io::Write;
use std::path::Path;
use std::sync::{Arc, Mutex};

use serde::{Deserialize, Serialize};

use crate::Message;

/// One structured trace record. Paths name the task chain, e.g.
/// `planner/rule_manager/rule_retriever`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "event", rename_all = "snake_case")]
pub enum TraceEvent {
    TaskStarted { path: String },
    Message { path: String, message: Message },
    ToolDispatch { path: String, tool_name: String },
    Delegation { parent: String, child: String },
    Deviation { path: String, attempt: u32, reason: String },
    TaskFinished { path: String, ok: bool, detail: String },
}

#[derive(Default)]
struct Inner {
    events: Vec<TraceEvent>,
    sink: Option<File>,
}

/// Shared, append-only trace of a task tree; optionally mirrored to a JSON
/// lines file. Contains no timestamps, so scripted runs trace identically.
#[derive(Clone, Default)]
pub struct Trace {
    inner: Arc<Mutex<Inner>>,
}

impl Trace {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn with_file(path: impl AsRef<Path>) -> std::io::Result<Self> {
        let trace = Self::new();
        trace.inner.lock().unwrap().sink = Some(File::create(path)?);
        Ok(trace)
    }

    pub fn push(&self, event: TraceEvent) {
        let mut inner = self.inner.lock().unwrap();
        if let Some(f) = &mut inner.sink {
            // tracing must never fail a task; a broken sink just stops mirroring
            let line = serde_json::to_string(&event).expect("event serializes");
            if writeln!(f, "{line}").is_err() {
                inner.sink = None;
            }
        }
        inner.events.push(event);
    }

    pub fn events(&self) -> Vec<TraceEvent> {
        self.inner.lock().unwrap().events.clone()
    }

    pub fn len(&self) -> usize {
        self.inner.lock().unwrap().events.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn to_jsonl(&self) -> String {
        self.events().iter().map(|e| serde_json::to_string(e).expect("event serializes") + "\n").collect()
    }
}

impl std::fmt::Debug for Trace {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "Trace({} events)", self.len())
    }
}
