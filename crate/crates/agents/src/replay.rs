//! Scripted responders: a backend that replays a scenario's reference
//! solution through the real agent protocol, and a wrapper that hides part
//! of the inlined documents from the planner.

use std::collections::BTreeSet;
use std::sync::{Arc, LazyLock};

use mup_core::model::{Comparator, Constraint, Plan, PlanAction, RuleId, RuleKind, Scenario};
use mup_docstore::tokenize;
use mup_llm::{ChatBackend, FnBackend, LlmError, Message, Role};
use regex::Regex;

use crate::feedback::{parse_feedback, Directive};
use crate::planner::{days_in, SubmitPlan};
use crate::prompts::{DOCUMENTS_BEGIN, DOCUMENTS_END, PLANNER_MARKER, RETRIEVER_MARKER};
use crate::retriever::NO_ANSWER;

static TAG: LazyLock<Regex> = LazyLock::new(|| Regex::new(r"\[([^\[\]\s]+)\]").unwrap());
static EXCERPT: LazyLock<Regex> = LazyLock::new(|| Regex::new(r"(?m)^\[c(\d+)\] ").unwrap());

/// Rule ids of `scenario` that appear as bracketed tags anywhere in the
/// conversation except the assistant's own turns.
pub fn visible_rule_ids(messages: &[Message], scenario: &Scenario) -> BTreeSet<RuleId> {
    messages
        .iter()
        .filter(|m| m.role != Role::Assistant)
        .flat_map(|m| TAG.captures_iter(&m.content).map(|c| c[1].to_string()).collect::<Vec<_>>())
        .filter_map(|id| scenario.rule(&RuleId(id.clone())).map(|r| r.rule_id.clone()))
        .collect()
}

/// A backend that answers as a perfect model would, given what the
/// conversation reveals: the retriever quotes the matching tagged rules from
/// its excerpts, and the planner replays the reference plans restricted to
/// rules whose tags it has seen.
pub fn reference_backend(scenario: Arc<Scenario>) -> Arc<dyn ChatBackend> {
    Arc::new(FnBackend(move |messages: &[Message]| respond(&scenario, messages)))
}

fn respond(scenario: &Scenario, messages: &[Message]) -> Result<String, LlmError> {
    let system = messages.first().map(|m| m.content.as_str()).unwrap_or_default();
    let last_user = messages
        .iter()
        .rev()
        .find(|m| m.role == Role::User)
        .map(|m| m.content.as_str())
        .ok_or_else(|| LlmError::BadRequest("no user message".into()))?;
    if system.starts_with(RETRIEVER_MARKER) {
        Ok(retriever_reply(scenario, last_user))
    } else if system.starts_with(PLANNER_MARKER) {
        planner_reply(scenario, messages, last_user)
    } else {
        Err(LlmError::BadRequest("unrecognised agent role".into()))
    }
}

fn retriever_reply(scenario: &Scenario, prompt: &str) -> String {
    let (excerpts, question) = prompt.rsplit_once("\nQuestion: ").unwrap_or(("", prompt));
    let words = tokenize(question);
    let user = scenario.users.iter().find(|u| words.iter().any(|w| *w == u.first_name.to_lowercase()));
    let q = question.to_lowercase();
    let kind = if q.contains("schedule") {
        Some(RuleKind::Schedule)
    } else if q.contains("preference") {
        Some(RuleKind::Preference)
    } else if q.contains("polic") {
        Some(RuleKind::Policy)
    } else {
        None
    };
    let (Some(user), Some(kind)) = (user, kind) else {
        return NO_ANSWER.to_string();
    };

    let starts: Vec<(usize, usize, String)> = EXCERPT
        .captures_iter(excerpts)
        .map(|c| {
            let m = c.get(0).unwrap();
            (m.start(), m.end(), format!("c{}", &c[1]))
        })
        .collect();
    let segments: Vec<(&str, &str)> = starts
        .iter()
        .enumerate()
        .map(|(i, (_, body, id))| {
            let end = starts.get(i + 1).map_or(excerpts.len(), |n| n.0);
            (id.as_str(), &excerpts[*body..end])
        })
        .collect();

    let lines: Vec<String> = scenario
        .rules_of(&user.user_id)
        .filter(|r| r.kind == kind)
        .filter_map(|r| {
            let tag = format!("[{}]", r.rule_id);
            segments
                .iter()
                .find(|(_, text)| text.contains(&tag))
                .map(|(id, _)| format!("{} {tag} ({id})", r.text.trim()))
        })
        .collect();
    if lines.is_empty() {
        NO_ANSWER.to_string()
    } else {
        lines.join("\n")
    }
}

fn last_submission(messages: &[Message]) -> Option<SubmitPlan> {
    messages
        .iter()
        .rev()
        .filter(|m| m.role == Role::Assistant)
        .filter_map(|m| m.tool_call.as_ref())
        .find(|c| c.tool_name == "submit_plan")
        .and_then(|c| serde_json::from_value(c.payload.clone()).ok())
}

fn submit(plan: &SubmitPlan) -> String {
    let mut v = serde_json::to_value(plan).expect("plan serializes");
    v.as_object_mut().expect("plan is an object").insert("tool".into(), "submit_plan".into());
    v.to_string()
}

fn planner_reply(scenario: &Scenario, messages: &[Message], request: &str) -> Result<String, LlmError> {
    if request.to_lowercase().contains("summar") {
        let cited: BTreeSet<RuleId> = last_submission(messages)
            .map(|s| s.plans.values().flatten().flat_map(|a| a.satisfied_rules.clone()).collect())
            .unwrap_or_default();
        if cited.is_empty() {
            return Ok("No plan has been made yet, so no rules were used.\nDONE".into());
        }
        let mut text = String::from("The plan follows these rules:");
        for id in &cited {
            let rule = scenario.rule(id).map(|r| r.text.trim()).unwrap_or_default();
            text.push_str(&format!("\n- {id}: {rule}"));
        }
        text.push_str("\nDONE");
        return Ok(text);
    }

    let days_text = request.rsplit_once("plan for ").map_or(request, |(_, d)| d);
    let mut days = days_in(days_text);
    if days.is_empty() {
        days = scenario.horizon.clone();
    }

    if let Some(feedback) = request.strip_prefix("Feedback: ") {
        let feedback = feedback.lines().next().unwrap_or_default();
        let mut plan = last_submission(messages).ok_or_else(|| LlmError::BadRequest("nothing to revise".into()))?;
        plan.plans.retain(|d, _| days.contains(d));
        for d in parse_feedback(feedback, &scenario.first_names()) {
            for actions in plan.plans.values_mut() {
                apply(scenario, &d, actions);
            }
        }
        return Ok(submit(&plan));
    }

    let visible = visible_rule_ids(messages, scenario);
    let mut plan = SubmitPlan { plans: Default::default(), resolutions: Vec::new(), explanation: None };
    for day in &days {
        let reference = scenario.reference.plans.get(day).cloned().unwrap_or_else(|| Plan::empty(*day));
        let actions =
            reference.actions.into_iter().filter(|a| a.satisfied_rules.iter().all(|r| visible.contains(r))).collect();
        plan.plans.insert(*day, actions);
    }
    plan.resolutions = scenario
        .reference
        .conflicts
        .iter()
        .filter(|ec| days.contains(&ec.conflict.context.day))
        .filter(|ec| ec.conflict.rule_ids.iter().all(|r| visible.contains(r)))
        .map(|ec| ec.resolution.clone())
        .collect();
    Ok(submit(&plan))
}

/// Moves or resets actions so they honour one feedback directive.
fn apply(scenario: &Scenario, directive: &Directive, actions: &mut [PlanAction]) {
    match directive {
        Directive::WithinHours { user, filter, not_before, not_after, .. } => {
            for a in actions.iter_mut() {
                if user.as_ref().is_some_and(|u| !a.involves(u)) || !a.mentions_all(filter) {
                    continue;
                }
                if let Some(nb) = *not_before {
                    if a.start < nb {
                        a.end += nb - a.start;
                        a.start = nb;
                    }
                }
                if let Some(na) = *not_after {
                    if a.end > na {
                        let shift = (a.end - na).min(a.start);
                        a.start -= shift;
                        a.end -= shift;
                    }
                }
            }
            actions.sort_by_key(|a| a.start);
        }
        Directive::Setting { zone, attribute, value, .. } => {
            let wanted = Constraint {
                attribute: attribute.clone(),
                comparator: Comparator::EQ,
                value: *value,
                unit: None,
                zone: zone.clone(),
                condition: None,
            };
            let contradicts = scenario
                .rules
                .iter()
                .filter_map(|r| r.constraint())
                .any(|c| c.attribute.eq_ignore_ascii_case(attribute) && !c.compatible_with(&wanted));
            if contradicts {
                return;
            }
            for a in actions.iter_mut() {
                if let Some(s) = &mut a.setting {
                    let in_zone = match (zone, &s.zone) {
                        (Some(z), Some(sz)) => z.eq_ignore_ascii_case(sz),
                        _ => true,
                    };
                    if in_zone && s.attribute.eq_ignore_ascii_case(attribute) {
                        s.value = *value;
                    }
                }
            }
        }
    }
}

/// Forwards to `inner` after cutting the inlined documents block down to
/// its first `keep` fraction, at a line boundary. Models a context window
/// too small for every document.
pub struct TruncatingBackend {
    inner: Arc<dyn ChatBackend>,
    keep: f64,
}

impl TruncatingBackend {
    pub const DEFAULT_KEEP: f64 = 2.0 / 3.0;

    pub fn new(inner: Arc<dyn ChatBackend>, keep: f64) -> Self {
        Self { inner, keep: keep.clamp(0.0, 1.0) }
    }

    pub fn truncate(&self, text: &str) -> String {
        let (Some(begin), Some(end)) = (text.find(DOCUMENTS_BEGIN), text.find(DOCUMENTS_END)) else {
            return text.to_string();
        };
        let body_start = begin + DOCUMENTS_BEGIN.len();
        if end < body_start {
            return text.to_string();
        }
        let body = &text[body_start..end];
        let keep_chars = (body.chars().count() as f64 * self.keep).floor() as usize;
        let cut = body.char_indices().nth(keep_chars).map_or(body.len(), |(i, _)| i);
        let kept = &body[..cut];
        let kept = if cut < body.len() { kept.rfind('\n').map_or("", |i| &kept[..=i]) } else { kept };
        format!("{}{}{}", &text[..body_start], kept, &text[end..])
    }
}

impl ChatBackend for TruncatingBackend {
    fn chat(&self, messages: &[Message]) -> Result<String, LlmError> {
        let cut: Vec<Message> = messages
            .iter()
            .map(|m| {
                if m.role == Role::System {
                    Message { content: self.truncate(&m.content), ..m.clone() }
                } else {
                    m.clone()
                }
            })
            .collect();
        self.inner.chat(&cut)
    }
}
