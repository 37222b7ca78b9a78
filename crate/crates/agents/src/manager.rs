use mup_llm::orchestrator::{Task, TaskCx, TaskError, TaskErrorKind};
use mup_llm::Message;

use crate::retriever::RetrieverAnswer;
use crate::sheet::{FieldStatus, RuleSheet, SheetField, UserSection};

pub const MANAGER_TASK: &str = "rule_manager";
/// Sheet fields, in the order they are asked about.
pub const FIELDS: [&str; 3] = ["schedule", "preferences", "policies"];

/// The question for `field` of `user` on the given 0-based attempt. Attempts
/// rotate through three phrasings.
pub fn question_for(user: &str, field: &str, attempt: u32) -> String {
    let plural = if field == "schedule" { "schedule entries" } else { field };
    match attempt % 3 {
        0 if field == "schedule" => format!("What is {user}'s schedule?"),
        0 => format!("What are {user}'s {field}?"),
        1 => format!("List all {plural} for user {user}."),
        _ => format!("According to {user}'s document, what {plural} apply?"),
    }
}

/// Fills the rule sheet by questioning a retriever about every
/// `(user, field)` pair, rephrasing after each non-answer.
pub struct RuleManagerTask<'r> {
    retriever: &'r mut dyn Task,
    users: Vec<String>,
    retry_budget: u32,
    calls: usize,
    sheet: Option<RuleSheet>,
}

impl<'r> RuleManagerTask<'r> {
    pub fn new(retriever: &'r mut dyn Task, users: Vec<String>, retry_budget: u32) -> Self {
        Self { retriever, users, retry_budget, calls: 0, sheet: None }
    }

    /// Retriever delegations made so far.
    pub fn calls(&self) -> usize {
        self.calls
    }

    pub fn sheet(&self) -> Option<&RuleSheet> {
        self.sheet.as_ref()
    }

    pub fn into_sheet(self) -> Option<RuleSheet> {
        self.sheet
    }

    fn collect_field(&mut self, user: &str, field: &str, cx: &mut TaskCx<'_>) -> Result<SheetField, TaskError> {
        for attempt in 0..self.retry_budget {
            let question = question_for(user, field, attempt);
            self.calls += 1;
            let reply = cx.delegate(self.retriever, Message::user(question))?;
            if let RetrieverAnswer::Answer { text, citations } = RetrieverAnswer::from_message(&reply) {
                return Ok(SheetField {
                    status: FieldStatus::Filled,
                    entries: text
                        .lines()
                        .map(str::trim)
                        .filter(|l| !l.is_empty() && *l != mup_llm::orchestrator::DONE)
                        .map(String::from)
                        .collect(),
                    sources: citations.iter().map(ToString::to_string).collect(),
                });
            }
        }
        Ok(SheetField::unresolved(self.retry_budget))
    }
}

impl Task for RuleManagerTask<'_> {
    fn name(&self) -> &str {
        MANAGER_TASK
    }

    fn run(&mut self, _input: Message, cx: &mut TaskCx<'_>) -> Result<Message, TaskError> {
        if self.users.is_empty() {
            return Err(cx.error(TaskErrorKind::InvalidInput("no users to collect rules for".into())));
        }
        if self.retry_budget == 0 {
            return Err(cx.error(TaskErrorKind::InvalidInput("retry budget must be at least 1".into())));
        }
        let mut sheet = RuleSheet::default();
        for user in self.users.clone() {
            let schedule = self.collect_field(&user, FIELDS[0], cx)?;
            let preferences = self.collect_field(&user, FIELDS[1], cx)?;
            let policies = self.collect_field(&user, FIELDS[2], cx)?;
            sheet.0.insert(user, UserSection { schedule, preferences, policies });
        }
        let json = serde_json::to_string(&sheet).expect("rule sheet serializes");
        self.sheet = Some(sheet);
        Ok(Message::assistant(json))
    }
}
