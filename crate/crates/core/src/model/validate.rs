use std::collections::{BTreeSet, HashMap, HashSet};
use std::fmt;

use serde::Serialize;

use super::ids::{RuleId, UserId};
use super::plan::Outcome;
use super::rule::{Condition, Payload, PolicyVariant};
use super::scenario::{Scenario, BUNDLED_CONFLICTS, BUNDLED_RULES, BUNDLED_USERS};
use super::time::{TimeWindow, MINUTES_PER_DAY};

/// One invariant violation, located by a path into the scenario.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ValidationError {
    pub path: String,
    pub message: String,
}

impl ValidationError {
    fn new(path: impl Into<String>, message: impl Into<String>) -> Self {
        Self { path: path.into(), message: message.into() }
    }
}

impl fmt::Display for ValidationError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.path, self.message)
    }
}

/// Checks every type invariant of a scenario. Returns one error per violation;
/// an empty list means the scenario is valid.
pub fn validate_scenario(s: &Scenario) -> Vec<ValidationError> {
    let mut errs = Vec::new();
    let mut push = |path: String, msg: String| errs.push(ValidationError::new(path, msg));

    if s.name.trim().is_empty() {
        push("name".into(), "scenario name is empty".into());
    }

    let mut user_ids = HashSet::new();
    for u in &s.users {
        let path = format!("users/{}", u.user_id);
        if u.first_name.trim().is_empty() {
            push(path.clone(), "first_name is empty".into());
        }
        if !user_ids.insert(&u.user_id) {
            push(path, "duplicate user_id".into());
        }
    }

    let mut rules_by_id: HashMap<&RuleId, &UserId> = HashMap::new();
    for r in &s.rules {
        if rules_by_id.insert(&r.rule_id, &r.owner).is_some() {
            push(format!("rules/{}", r.rule_id), "duplicate rule_id".into());
        }
    }

    for u in &s.users {
        for rid in &u.rules {
            match rules_by_id.get(rid) {
                None => push(format!("users/{}/rules/{rid}", u.user_id), "references an unknown rule".into()),
                Some(owner) if **owner != u.user_id => {
                    push(format!("users/{}/rules/{rid}", u.user_id), format!("rule is owned by {owner}"))
                }
                _ => {}
            }
        }
    }

    let activity_classes: BTreeSet<_> =
        s.rules.iter().filter_map(|r| r.schedule().map(|e| &e.activity_class)).collect();

    for r in &s.rules {
        let path = format!("rules/{}", r.rule_id);
        if !user_ids.contains(&r.owner) {
            push(path.clone(), format!("owner {} is not a scenario user", r.owner));
        } else if let Some(u) = s.user(&r.owner) {
            if !u.rules.contains(&r.rule_id) {
                push(path.clone(), format!("not listed in {}'s rules", r.owner));
            }
        }
        if r.text.trim().is_empty() {
            push(path.clone(), "rule text is empty".into());
        }
        if s.bundled && r.checker.is_none() {
            push(path.clone(), "bundled rule has no checker".into());
        }
        let Some(payload) = &r.payload else { continue };
        if !payload.matches_kind(r.kind) {
            push(path.clone(), format!("payload does not match rule kind {:?}", r.kind));
        }
        match payload {
            Payload::Schedule(e) => {
                if !(e.start < e.end && e.end <= MINUTES_PER_DAY) {
                    push(path.clone(), format!("schedule window {}..{} is empty or out of range", e.start, e.end));
                }
                if e.activity.trim().is_empty() {
                    push(path.clone(), "schedule activity is empty".into());
                }
            }
            Payload::Constraint(c) => {
                if c.is_physical() && c.unit.as_deref().is_none_or(|u| u.trim().is_empty()) {
                    push(path.clone(), format!("physical attribute `{}` has no unit", c.attribute));
                }
                if !c.value.is_finite() {
                    push(path.clone(), "constraint value is not finite".into());
                }
                if let Some(Condition::Window { days, start, end }) = &c.condition {
                    if days.is_empty() || !TimeWindow::new(*start, *end).is_valid() {
                        push(path.clone(), "condition window is empty or out of range".into());
                    }
                }
            }
            Payload::Policy(p) => {
                if let PolicyVariant::ActivityPriority { order } = &p.variant {
                    check_priority_order(order, &activity_classes, &path, &mut push);
                }
            }
        }
    }

    if let PolicyVariant::ActivityPriority { order } = &s.policy.variant {
        check_priority_order(order, &activity_classes, "policy", &mut push);
    }

    if s.bundled {
        if s.users.len() != BUNDLED_USERS {
            push("users".into(), format!("bundled scenario needs {BUNDLED_USERS} users, has {}", s.users.len()));
        }
        if s.rules.len() != BUNDLED_RULES {
            push("rules".into(), format!("bundled scenario needs {BUNDLED_RULES} rules, has {}", s.rules.len()));
        }
        if s.reference.conflicts.len() != BUNDLED_CONFLICTS {
            push(
                "reference/conflicts".into(),
                format!(
                    "bundled scenario needs {BUNDLED_CONFLICTS} reference conflicts, has {}",
                    s.reference.conflicts.len()
                ),
            );
        }
    }

    for (day, plan) in &s.reference.plans {
        let path = format!("reference/plans/{day}");
        if plan.day != *day {
            push(path.clone(), format!("plan is keyed {day} but dated {}", plan.day));
        }
        if !plan.is_sorted() {
            push(path.clone(), "actions are not sorted by start time".into());
        }
        for (i, a) in plan.actions.iter().enumerate() {
            if !TimeWindow::new(a.start, a.end).is_valid() {
                push(format!("{path}/actions/{i}"), "empty or out-of-range window".into());
            }
            for rid in &a.satisfied_rules {
                if !rules_by_id.contains_key(rid) {
                    push(format!("{path}/actions/{i}"), format!("unknown rule {rid}"));
                }
            }
            for uid in &a.users {
                if !user_ids.contains(uid) {
                    push(format!("{path}/actions/{i}"), format!("unknown user {uid}"));
                }
            }
        }
    }

    for (i, ec) in s.reference.conflicts.iter().enumerate() {
        let c = &ec.conflict;
        let path = format!("reference/conflicts/{i}");
        if c.participants.len() < 2 {
            push(path.clone(), "conflict needs at least two participants".into());
        }
        for u in &c.participants {
            if !user_ids.contains(u) {
                push(path.clone(), format!("unknown participant {u}"));
            }
        }
        let mut owners = BTreeSet::new();
        for rid in &c.rule_ids {
            match rules_by_id.get(rid) {
                Some(owner) => {
                    owners.insert(*owner);
                }
                None => push(path.clone(), format!("unknown rule {rid}")),
            }
        }
        if owners.len() < 2 {
            push(path.clone(), "conflict rules must belong to two or more users".into());
        }
        let res = &ec.resolution;
        if res.conflict_id != c.conflict_id {
            push(path.clone(), "resolution refers to another conflict".into());
        }
        match &res.outcome {
            Outcome::Winner { user, .. } => {
                if !c.participants.contains(user) {
                    push(path.clone(), format!("winner {user} is not a participant"));
                }
                if matches!(s.policy.variant, PolicyVariant::EscalateToDiscussion) {
                    push(path.clone(), "escalation policy must produce Escalated".into());
                }
            }
            Outcome::Escalated => {}
        }
    }

    errs
}

fn check_priority_order(
    order: &[super::rule::ActivityClass],
    classes: &BTreeSet<&super::rule::ActivityClass>,
    path: &str,
    push: &mut impl FnMut(String, String),
) {
    let mut seen = HashSet::new();
    for class in order {
        if !seen.insert(class) {
            push(path.to_string(), format!("activity class {class} listed twice"));
        }
    }
    for class in classes {
        if !seen.contains(*class) {
            push(path.to_string(), format!("activity class {class} missing from priority order"));
        }
    }
}
