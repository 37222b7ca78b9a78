//! The Rule Retriever, Rule Manager and Planner agents, the planning
//! session that ties them together, and scripted responders that replay a
//! scenario's reference solution.

mod error;
mod feedback;
mod manager;
mod planner;
pub mod prompts;
pub mod replay;
mod retriever;
mod sheet;

pub use error::AgentError;
pub use feedback::{parse_feedback, Directive};
pub use manager::{question_for, RuleManagerTask, FIELDS, MANAGER_TASK};
pub use planner::{
    conflict_tool, days_in, submit_plan_tool, AgentConfig, Condition, PlannerOutput, Session, SubmitPlan,
    UnresolvedField, PLANNER_TASK,
};
pub use replay::{reference_backend, visible_rule_ids, TruncatingBackend};
pub use retriever::{retriever_answer, RetrieverAnswer, RetrieverTask, NO_ANSWER, RETRIEVER_TASK};
pub use sheet::{rule_sheet_tool, FieldStatus, RuleSheet, SheetField, UserSection};

use std::sync::Arc;

use mup_core::model::Scenario;
use mup_docstore::{DocumentStore, Embedder, StoreError, StoreParams};

/// Indexes a scenario's user documents, one document per user id.
pub fn ingest_scenario(
    scenario: &Scenario,
    params: StoreParams,
    embedder: Arc<dyn Embedder>,
) -> Result<DocumentStore, StoreError> {
    DocumentStore::ingest(
        scenario.documents.iter().map(|(user, doc)| (user.to_string(), doc.as_str())),
        params,
        embedder,
    )
}
