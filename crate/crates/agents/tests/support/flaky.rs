//! A retriever stand-in that fails on a fixed pattern, shared by the Rule
//! Manager tests and the acceptance gate.
#![allow(dead_code)]

use std::collections::BTreeMap;

use mup_agents::{FIELDS, NO_ANSWER};
use mup_llm::orchestrator::{Task, TaskCx, TaskError};
use mup_llm::Message;

pub const USERS: [&str; 3] = ["Blaine", "Ryan", "Susie"];

/// Fails the first `failures` questions about each (user, field) pair, or
/// every question about the fields in `always_fail`.
pub struct FlakyRetriever {
    pub failures: usize,
    pub always_fail: Vec<&'static str>,
    pub seen: BTreeMap<(String, &'static str), usize>,
    pub questions: Vec<String>,
}

impl FlakyRetriever {
    pub fn new(failures: usize) -> Self {
        Self { failures, always_fail: Vec::new(), seen: BTreeMap::new(), questions: Vec::new() }
    }

    pub fn failing(fields: &[&'static str]) -> Self {
        Self { always_fail: fields.to_vec(), ..Self::new(0) }
    }
}

impl Task for FlakyRetriever {
    fn name(&self) -> &str {
        "retriever"
    }

    fn run(&mut self, input: Message, _cx: &mut TaskCx<'_>) -> Result<Message, TaskError> {
        let q = input.content.clone();
        self.questions.push(q.clone());
        let user = USERS.iter().find(|u| q.contains(*u)).unwrap().to_string();
        let field = FIELDS.into_iter().find(|f| q.contains(&f[..6])).unwrap();
        let n = self.seen.entry((user.clone(), field)).or_default();
        *n += 1;
        if self.always_fail.contains(&field) || *n <= self.failures {
            return Ok(Message::assistant(NO_ANSWER));
        }
        Ok(Message::assistant(format!("{user} {field} line one [X1] (c1)\n{user} {field} line two [X2] (c2)")))
    }
}
