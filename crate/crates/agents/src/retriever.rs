use std::sync::{Arc, LazyLock};

use mup_docstore::{tokenize, ChunkId, DocumentStore, DEFAULT_K};
use mup_llm::orchestrator::{run_task, Agent, AgentSpec, NoTools, Task, TaskCx, TaskErrorKind, RETRIEVER_MAX_TURNS};
use mup_llm::{ChatBackend, Message, Trace};
use regex::Regex;
use serde::{Deserialize, Serialize};

use crate::prompts;
use crate::AgentError;

pub const RETRIEVER_TASK: &str = "retriever";
/// Sentinel a retriever replies with when the excerpts hold no answer.
pub const NO_ANSWER: &str = "DO-NOT-KNOW";

static CITATION: LazyLock<Regex> = LazyLock::new(|| Regex::new(r"\(c(\d+)\)").unwrap());

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum RetrieverAnswer {
    Answer { text: String, citations: Vec<ChunkId> },
    NoAnswer,
}

impl RetrieverAnswer {
    /// Interprets a retriever reply. Citations outside `injected` are
    /// dropped; an answer citing nothing is attributed to every injected
    /// chunk.
    pub fn from_reply(reply: &str, injected: &[ChunkId]) -> Self {
        let text = reply.trim();
        if text.is_empty() || text.contains(NO_ANSWER) {
            return RetrieverAnswer::NoAnswer;
        }
        let mut citations: Vec<ChunkId> = cited(text).into_iter().filter(|c| injected.contains(c)).collect();
        if citations.is_empty() {
            citations = injected.to_vec();
        }
        RetrieverAnswer::Answer { text: text.to_string(), citations }
    }

    /// Reads back a message produced by [`RetrieverAnswer::to_message`].
    pub fn from_message(message: &Message) -> Self {
        let text = message.content.trim();
        if text.is_empty() || text.contains(NO_ANSWER) {
            return RetrieverAnswer::NoAnswer;
        }
        RetrieverAnswer::Answer { text: text.to_string(), citations: cited(text) }
    }

    pub fn to_message(&self) -> Message {
        match self {
            RetrieverAnswer::Answer { text, .. } => Message::assistant(text.clone()),
            RetrieverAnswer::NoAnswer => Message::assistant(NO_ANSWER),
        }
    }

    pub fn is_answer(&self) -> bool {
        matches!(self, RetrieverAnswer::Answer { .. })
    }
}

fn cited(text: &str) -> Vec<ChunkId> {
    let mut ids: Vec<ChunkId> = CITATION.captures_iter(text).filter_map(|c| c[1].parse().ok().map(ChunkId)).collect();
    ids.sort();
    ids.dedup();
    ids
}

/// Answers one question from the chunks hybrid retrieval returns for it.
/// Each question gets a fresh agent, so answers never depend on earlier ones.
pub struct RetrieverTask {
    store: Arc<DocumentStore>,
    backend: Arc<dyn ChatBackend>,
    k: usize,
    max_turns: u32,
    /// `(lowercased first name, document id)` used to scope questions that
    /// name exactly one user.
    scopes: Vec<(String, String)>,
    last: Option<RetrieverAnswer>,
}

impl RetrieverTask {
    pub fn new(store: Arc<DocumentStore>, backend: Arc<dyn ChatBackend>) -> Self {
        Self { store, backend, k: DEFAULT_K, max_turns: RETRIEVER_MAX_TURNS, scopes: Vec::new(), last: None }
    }

    pub fn with_k(mut self, k: usize) -> Self {
        self.k = k;
        self
    }

    pub fn with_max_turns(mut self, max_turns: u32) -> Self {
        self.max_turns = max_turns;
        self
    }

    /// Registers the document that belongs to a user's first name.
    pub fn with_scope(mut self, first_name: &str, doc_id: impl Into<String>) -> Self {
        self.scopes.push((first_name.to_lowercase(), doc_id.into()));
        self
    }

    pub fn last_answer(&self) -> Option<&RetrieverAnswer> {
        self.last.as_ref()
    }

    fn scope_for(&self, question: &str) -> Option<&str> {
        let words = tokenize(question);
        let mut named = self.scopes.iter().filter(|(name, _)| words.iter().any(|w| w == name));
        match (named.next(), named.next()) {
            (Some((_, doc)), None) => Some(doc.as_str()),
            _ => None,
        }
    }
}

impl Task for RetrieverTask {
    fn name(&self) -> &str {
        RETRIEVER_TASK
    }

    fn run(&mut self, input: Message, cx: &mut TaskCx<'_>) -> Result<Message, mup_llm::orchestrator::TaskError> {
        let question = input.content.trim();
        if question.is_empty() {
            return Err(cx.error(TaskErrorKind::InvalidInput("question is empty".into())));
        }
        let hits = self
            .store
            .hybrid_retrieve_in(question, self.k, self.scope_for(question))
            .map_err(|e| cx.error(TaskErrorKind::Tool(e.to_string())))?;
        let injected: Vec<ChunkId> = hits.iter().map(|h| h.chunk_id).collect();
        let answer = if injected.is_empty() {
            RetrieverAnswer::NoAnswer
        } else {
            let mut prompt = String::from("Excerpts:\n");
            for id in &injected {
                let chunk = self.store.chunk(*id).expect("hit refers to a stored chunk");
                prompt.push_str(&format!("\n[{id}] {}\n", chunk.text.trim()));
            }
            prompt.push_str(&format!("\nQuestion: {question}"));
            let spec = AgentSpec::new(RETRIEVER_TASK, prompts::RETRIEVER, self.backend.clone())
                .with_max_turns(self.max_turns)
                .free_text_is_result(true);
            let mut agent = Agent::new(spec)?;
            let reply = cx.run_agent(&mut agent, Message::user(prompt), &mut NoTools)?;
            RetrieverAnswer::from_reply(&reply.content, &injected)
        };
        let message = answer.to_message();
        self.last = Some(answer);
        Ok(message)
    }
}

/// Runs one question through `retriever` as a stand-alone task.
pub fn retriever_answer(retriever: &mut RetrieverTask, question: &str) -> Result<RetrieverAnswer, AgentError> {
    if question.trim().is_empty() {
        return Err(AgentError::EmptyInput("question"));
    }
    run_task(&Trace::new(), retriever, Message::user(question))?;
    Ok(retriever.last.clone().expect("a successful run records its answer"))
}
