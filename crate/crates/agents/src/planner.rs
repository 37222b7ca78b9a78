use std::collections::{BTreeMap, BTreeSet};
use std::sync::Arc;

use mup_core::conflict::{detect_conflicts, eval, resolve, ResolutionContext};
use mup_core::model::{
    Comparator, ConflictId, Constraint, Outcome, Plan, PlanAction, PlanSet, PolicyKind, Resolution, Rule, RuleId,
    Scenario, TimeWindow, Weekday,
};
use mup_docstore::{DocumentStore, DEFAULT_K};
use mup_llm::orchestrator::{
    run_task, Agent, AgentSpec, Task, TaskCx, TaskError, ToolHandler, ToolOutcome, PLANNER_MAX_TURNS,
    RETRIEVER_MAX_TURNS,
};
use mup_llm::{ChatBackend, Message, ToolCall, ToolSchema, Trace};
use schemars::JsonSchema;
use serde::{Deserialize, Serialize};

use crate::feedback::{parse_feedback, Directive};
use crate::manager::RuleManagerTask;
use crate::prompts;
use crate::retriever::RetrieverTask;
use crate::sheet::{rule_sheet_tool, RuleSheet};
use crate::AgentError;

pub const PLANNER_TASK: &str = "planner";

/// How the planning work is split across agents.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Condition {
    /// Planner, Rule Manager and Rule Retriever over the document store.
    MultiAgent,
    /// One planner with every document in its system prompt.
    Monolithic,
}

impl Condition {
    pub const ALL: [Condition; 2] = [Condition::MultiAgent, Condition::Monolithic];

    pub fn slug(self) -> &'static str {
        match self {
            Condition::MultiAgent => "multi_agent",
            Condition::Monolithic => "monolithic",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct AgentConfig {
    /// Chunks injected per retriever question.
    pub k: usize,
    /// Questions per sheet field before it is left unresolved.
    pub retry_budget: u32,
    pub planner_max_turns: u32,
    pub retriever_max_turns: u32,
    /// Offer the conflict engine to the planner as a tool.
    pub use_conflict_tool: bool,
    /// Extra revisions requested when a plan still breaks feedback.
    pub feedback_retries: u32,
}

impl Default for AgentConfig {
    fn default() -> Self {
        Self {
            k: DEFAULT_K,
            retry_budget: 3,
            planner_max_turns: PLANNER_MAX_TURNS,
            retriever_max_turns: RETRIEVER_MAX_TURNS,
            use_conflict_tool: true,
            feedback_retries: 2,
        }
    }
}

/// Payload of the planner's `submit_plan` tool.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, JsonSchema)]
pub struct SubmitPlan {
    /// Actions per day, each list sorted by start time.
    pub plans: BTreeMap<Weekday, Vec<PlanAction>>,
    #[serde(default)]
    pub resolutions: Vec<Resolution>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub explanation: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, JsonSchema)]
struct DetectRequest {
    /// Rules to check against each other.
    rule_ids: Vec<RuleId>,
}

pub fn submit_plan_tool() -> ToolSchema {
    ToolSchema::new(
        "submit_plan",
        serde_json::to_value(schemars::schema_for!(SubmitPlan)).expect("schema serializes"),
        "Submit the plans for the requested days together with how each conflict was settled.",
    )
}

pub fn conflict_tool() -> ToolSchema {
    ToolSchema::new(
        "detect_conflicts",
        serde_json::to_value(schemars::schema_for!(DetectRequest)).expect("schema serializes"),
        "List the conflicts among the given rules and how the household policy settles each.",
    )
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct UnresolvedField {
    pub user: String,
    pub field: String,
    pub attempts: u32,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct PlannerOutput {
    #[serde(rename = "plan", alias = "plans")]
    pub plans: PlanSet,
    pub resolutions: Vec<Resolution>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub explanation: Option<String>,
    /// Rule ids cited by each action, parallel to the day's actions.
    pub rule_citations: BTreeMap<Weekday, Vec<Vec<RuleId>>>,
    pub unresolved_fields: Vec<UnresolvedField>,
    /// Feedback the final revision still does not satisfy.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub feedback_violations: Vec<String>,
}

impl PlannerOutput {
    /// Every rule id cited anywhere in the plans, sorted.
    pub fn cited_rules(&self) -> BTreeSet<RuleId> {
        self.rule_citations.values().flatten().flatten().cloned().collect()
    }
}

/// All weekdays named in `text`, in order of first mention. "Sun room"
/// is a room, not a day.
pub fn days_in(text: &str) -> Vec<Weekday> {
    let mut days = Vec::new();
    let mut rest = text;
    while let Some(pos) = rest.find(|c: char| c.is_ascii_alphabetic()) {
        rest = &rest[pos..];
        let len = rest.find(|c: char| !c.is_ascii_alphabetic()).unwrap_or(rest.len());
        let (word, after) = rest.split_at(len);
        let room = after.trim_start().to_ascii_lowercase().starts_with("room");
        if let Ok(day) = word.parse::<Weekday>() {
            if !room && !days.contains(&day) {
                days.push(day);
            }
        }
        rest = after;
    }
    days
}

fn day_list(days: &[Weekday]) -> String {
    let names: Vec<&str> = days.iter().map(|d| d.full_name()).collect();
    prompts::join_names(&names)
}

/// Tool handler for the planner: records the submitted plan and answers
/// conflict queries with the deterministic engine.
struct PlannerTools<'a> {
    scenario: &'a Scenario,
    submitted: Option<SubmitPlan>,
}

impl PlannerTools<'_> {
    fn check_submission(&self, plan: &SubmitPlan) -> Result<(), String> {
        let mut problems = Vec::new();
        for (day, actions) in &plan.plans {
            for (i, a) in actions.iter().enumerate() {
                if !TimeWindow::new(a.start, a.end).is_valid() {
                    problems
                        .push(format!("{day} action {i} has an empty or out-of-range window {}..{}", a.start, a.end));
                }
                for u in &a.users {
                    if self.scenario.user(u).is_none() {
                        problems.push(format!("{day} action {i} names unknown user `{u}`"));
                    }
                }
            }
        }
        if problems.is_empty() {
            Ok(())
        } else {
            Err(problems.join("; "))
        }
    }

    fn conflicts(&self, request: DetectRequest) -> Result<String, String> {
        let unknown: Vec<&str> =
            request.rule_ids.iter().filter(|id| self.scenario.rule(id).is_none()).map(RuleId::as_str).collect();
        if !unknown.is_empty() {
            return Err(format!("unknown rule ids: {}", unknown.join(", ")));
        }
        let rules: Vec<Rule> =
            self.scenario.rules.iter().filter(|r| request.rule_ids.contains(&r.rule_id)).cloned().collect();
        let ctx = ResolutionContext::new(self.scenario.first_names(), &rules);
        let found: Vec<serde_json::Value> = detect_conflicts(&rules, &self.scenario.horizon)
            .into_iter()
            .map(|c| {
                let resolution = match resolve(&c, &self.scenario.policy, &ctx) {
                    Ok(r) => serde_json::to_value(r).expect("resolution serializes"),
                    Err(e) => serde_json::Value::String(e.to_string()),
                };
                serde_json::json!({"conflict": c, "resolution": resolution})
            })
            .collect();
        Ok(serde_json::to_string(&found).expect("conflicts serialize"))
    }
}

impl ToolHandler for PlannerTools<'_> {
    fn handle(&mut self, call: &ToolCall, _cx: &mut TaskCx<'_>) -> Result<ToolOutcome, TaskError> {
        match call.tool_name.as_str() {
            "submit_plan" => {
                let plan: SubmitPlan = match serde_json::from_value(call.payload.clone()) {
                    Ok(p) => p,
                    Err(e) => return Ok(ToolOutcome::Reply(format!("Rejected: {e}. Submit the plan again."))),
                };
                if let Err(problems) = self.check_submission(&plan) {
                    return Ok(ToolOutcome::Reply(format!("Rejected: {problems}. Submit the plan again.")));
                }
                let days: Vec<String> = plan.plans.keys().map(ToString::to_string).collect();
                self.submitted = Some(plan);
                Ok(ToolOutcome::Finish(format!("plan submitted for {}", days.join(", "))))
            }
            "detect_conflicts" => {
                let reply = serde_json::from_value::<DetectRequest>(call.payload.clone())
                    .map_err(|e| e.to_string())
                    .and_then(|req| self.conflicts(req));
                Ok(ToolOutcome::Reply(reply.unwrap_or_else(|e| format!("Error: {e}"))))
            }
            other => Ok(ToolOutcome::Reply(format!("Error: unknown tool `{other}`"))),
        }
    }
}

/// One planner turn as a native task: collects the rule sheet on first use,
/// then runs the planner agent.
struct PlannerTask<'s> {
    scenario: &'s Scenario,
    store: &'s Arc<DocumentStore>,
    backend: &'s Arc<dyn ChatBackend>,
    config: &'s AgentConfig,
    condition: Condition,
    planner: &'s mut Agent,
    sheet: &'s mut Option<RuleSheet>,
    submitted: Option<SubmitPlan>,
}

impl Task for PlannerTask<'_> {
    fn name(&self) -> &str {
        PLANNER_TASK
    }

    fn run(&mut self, input: Message, cx: &mut TaskCx<'_>) -> Result<Message, TaskError> {
        if self.condition == Condition::MultiAgent && self.sheet.is_none() {
            let mut retriever = RetrieverTask::new(self.store.clone(), self.backend.clone())
                .with_k(self.config.k)
                .with_max_turns(self.config.retriever_max_turns);
            for u in &self.scenario.users {
                retriever = retriever.with_scope(&u.first_name, u.user_id.as_str());
            }
            let users = self.scenario.users.iter().map(|u| u.first_name.clone()).collect();
            let mut manager = RuleManagerTask::new(&mut retriever, users, self.config.retry_budget);
            cx.delegate(&mut manager, Message::user("Collect the schedule, preferences and policies of every user."))?;
            let sheet = manager.into_sheet().expect("a finished rule manager holds its sheet");
            let text = serde_json::to_string_pretty(&sheet).expect("rule sheet serializes");
            let call = ToolCall { tool_name: rule_sheet_tool().tool_name, payload: sheet.to_json() };
            cx.append(self.planner, Message::tool_result(call, text));
            *self.sheet = Some(sheet);
        }
        let mut tools = PlannerTools { scenario: self.scenario, submitted: None };
        let reply = cx.run_agent(self.planner, input, &mut tools)?;
        self.submitted = tools.submitted;
        Ok(reply)
    }
}

/// A planning conversation bound to one scenario. Sessions are
/// single-threaded; distinct sessions may share a store.
pub struct Session {
    scenario: Arc<Scenario>,
    store: Arc<DocumentStore>,
    backend: Arc<dyn ChatBackend>,
    condition: Condition,
    config: AgentConfig,
    planner: Agent,
    trace: Trace,
    sheet: Option<RuleSheet>,
    last: Option<PlannerOutput>,
}

impl Session {
    pub fn new(
        scenario: Arc<Scenario>,
        store: Arc<DocumentStore>,
        backend: Arc<dyn ChatBackend>,
        condition: Condition,
        config: AgentConfig,
    ) -> Result<Self, AgentError> {
        Self::with_trace(scenario, store, backend, condition, config, Trace::new())
    }

    pub fn with_trace(
        scenario: Arc<Scenario>,
        store: Arc<DocumentStore>,
        backend: Arc<dyn ChatBackend>,
        condition: Condition,
        config: AgentConfig,
        trace: Trace,
    ) -> Result<Self, AgentError> {
        if scenario.users.is_empty() {
            return Err(AgentError::NoUsers);
        }
        let system = match condition {
            Condition::MultiAgent => prompts::planner_system_prompt(&scenario),
            Condition::Monolithic => prompts::monolithic_system_prompt(&scenario),
        };
        let mut tools = vec![submit_plan_tool()];
        if config.use_conflict_tool {
            tools.push(conflict_tool());
        }
        let spec = AgentSpec::new(PLANNER_TASK, system, backend.clone())
            .with_tools(tools)
            .with_max_turns(config.planner_max_turns);
        Ok(Self {
            planner: Agent::new(spec)?,
            scenario,
            store,
            backend,
            condition,
            config,
            trace,
            sheet: None,
            last: None,
        })
    }

    pub fn scenario(&self) -> &Arc<Scenario> {
        &self.scenario
    }

    pub fn condition(&self) -> Condition {
        self.condition
    }

    pub fn trace(&self) -> &Trace {
        &self.trace
    }

    /// The planner's conversation so far.
    pub fn history(&self) -> &[Message] {
        self.planner.memory()
    }

    pub fn rule_sheet(&self) -> Option<&RuleSheet> {
        self.sheet.as_ref()
    }

    pub fn last_output(&self) -> Option<&PlannerOutput> {
        self.last.as_ref()
    }

    /// Answers a user query. The first query collects the rule sheet.
    pub fn planner_respond(&mut self, query: &str) -> Result<PlannerOutput, AgentError> {
        if query.trim().is_empty() {
            return Err(AgentError::EmptyInput("query"));
        }
        let out = self.turn(Message::user(query.trim()), &days_in(query))?;
        self.last = Some(out.clone());
        Ok(out)
    }

    /// Revises the last plans according to `text`. Constraints the feedback
    /// states are checked against the revision; the planner gets a bounded
    /// number of further attempts, and whatever still fails is reported.
    /// Feedback that contradicts a user's rule is escalated instead.
    pub fn planner_feedback(&mut self, text: &str) -> Result<PlannerOutput, AgentError> {
        let text = text.trim();
        if text.is_empty() {
            return Err(AgentError::EmptyInput("feedback"));
        }
        let Some(prev) = &self.last else {
            return Err(AgentError::NoPriorResponse);
        };
        let days: Vec<Weekday> = prev.plans.keys().copied().collect();
        let directives = parse_feedback(text, &self.scenario.first_names());

        let mut escalations = Vec::new();
        let mut checks = Vec::new();
        for d in &directives {
            match self.contradicted_rules(d) {
                Some(rules) => escalations.push(feedback_escalation(d, &rules)),
                None => checks.push(d),
            }
        }

        let request = format!("Feedback: {text}\nPlease revise the plan for {}.", day_list(&days));
        let mut out = self.turn(Message::user(request), &days)?;
        let mut broken = unmet(&checks, &out.plans);
        for _ in 0..self.config.feedback_retries {
            if broken.is_empty() {
                break;
            }
            let request = format!(
                "Feedback: {text}\nThe revised plan still breaks: {}. Please revise the plan for {}.",
                broken.join("; "),
                day_list(&days)
            );
            out = self.turn(Message::user(request), &days)?;
            broken = unmet(&checks, &out.plans);
        }
        out.feedback_violations = broken;
        out.resolutions.extend(escalations);
        self.last = Some(out.clone());
        Ok(out)
    }

    /// Rules a setting directive cannot coexist with.
    fn contradicted_rules(&self, directive: &Directive) -> Option<Vec<&Rule>> {
        let Directive::Setting { zone, attribute, value, .. } = directive else {
            return None;
        };
        let wanted = Constraint {
            attribute: attribute.clone(),
            comparator: Comparator::EQ,
            value: *value,
            unit: None,
            zone: zone.clone(),
            condition: None,
        };
        let rules: Vec<&Rule> = self
            .scenario
            .rules
            .iter()
            .filter(|r| {
                r.constraint().is_some_and(|c| {
                    c.attribute.eq_ignore_ascii_case(attribute)
                        && match (&c.zone, zone) {
                            (Some(a), Some(b)) => a.eq_ignore_ascii_case(b),
                            _ => true,
                        }
                        && !c.compatible_with(&wanted)
                })
            })
            .collect();
        (!rules.is_empty()).then_some(rules)
    }

    fn turn(&mut self, input: Message, days: &[Weekday]) -> Result<PlannerOutput, AgentError> {
        let mut task = PlannerTask {
            scenario: &self.scenario,
            store: &self.store,
            backend: &self.backend,
            config: &self.config,
            condition: self.condition,
            planner: &mut self.planner,
            sheet: &mut self.sheet,
            submitted: None,
        };
        let reply = run_task(&self.trace, &mut task, input)?;
        let submitted = task.submitted.take();

        let (mut plans, resolutions, mut explanation) = match submitted {
            Some(s) => {
                let plans: PlanSet = s
                    .plans
                    .into_iter()
                    .map(|(day, actions)| {
                        let mut plan = Plan { day, actions };
                        plan.sort();
                        (day, plan)
                    })
                    .collect();
                (plans, s.resolutions, s.explanation)
            }
            None => {
                let (plans, resolutions) =
                    self.last.as_ref().map(|l| (l.plans.clone(), l.resolutions.clone())).unwrap_or_default();
                (plans, resolutions, Some(reply.content))
            }
        };
        for day in days {
            plans.entry(*day).or_insert_with(|| Plan::empty(*day));
        }
        let mut notes: Vec<String> = explanation.take().into_iter().filter(|e| !e.trim().is_empty()).collect();
        let idle: Vec<Weekday> = days.iter().copied().filter(|d| plans[d].actions.is_empty()).collect();
        if !idle.is_empty() {
            notes
                .push(format!("No activities or rules apply to {}, so there is nothing to schedule.", day_list(&idle)));
        }
        let unresolved: Vec<UnresolvedField> = self
            .sheet
            .as_ref()
            .map(|s| {
                s.unresolved()
                    .into_iter()
                    .map(|(user, field, attempts)| UnresolvedField { user, field: field.to_string(), attempts })
                    .collect()
            })
            .unwrap_or_default();
        if !unresolved.is_empty() {
            let what: Vec<String> =
                unresolved.iter().map(|u| format!("{}'s {} ({} attempts)", u.user, u.field, u.attempts)).collect();
            notes.push(format!("Could not find in the documents: {}.", what.join(", ")));
        }
        explanation = (!notes.is_empty()).then(|| notes.join("\n"));
        let rule_citations = plans
            .iter()
            .map(|(day, plan)| (*day, plan.actions.iter().map(|a| a.satisfied_rules.clone()).collect()))
            .collect();
        Ok(PlannerOutput {
            plans,
            resolutions,
            explanation,
            rule_citations,
            unresolved_fields: unresolved,
            feedback_violations: Vec::new(),
        })
    }
}

fn unmet(checks: &[&Directive], plans: &PlanSet) -> Vec<String> {
    checks.iter().filter(|d| !eval(&d.predicate(), plans)).map(|d| d.text().to_string()).collect()
}

fn feedback_escalation(directive: &Directive, rules: &[&Rule]) -> Resolution {
    let Directive::Setting { zone, value, .. } = directive else { unreachable!("only settings are escalated") };
    let ids: Vec<&str> = rules.iter().map(|r| r.rule_id.as_str()).collect();
    let zone = zone.as_deref().unwrap_or("all");
    Resolution {
        conflict_id: ConflictId(format!("FB:{zone}:{value}:{}", ids.join("+"))),
        policy_applied: PolicyKind::EscalateToDiscussion,
        outcome: Outcome::Escalated,
        rationale: format!(
            "The request \"{}\" contradicts {}; it is flagged for discussion instead of applied.",
            directive.text(),
            rules.iter().map(|r| format!("{} ({})", r.rule_id, r.text.trim())).collect::<Vec<_>>().join(", ")
        ),
    }
}
