use std::collections::{BTreeMap, BTreeSet};

use crate::model::{
    ActivityClass, Condition, Conflict, ConflictKind, Outcome, PolicyVariant, ReassignTarget, Reassignment, Resolution,
    ResolutionPolicy, Rule, RuleId, Scenario, ScheduleEntry, UserId,
};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ResolveError {
    #[error("policy {policy:?} cannot decide conflict {conflict}: {reason}")]
    PolicyInapplicable { conflict: String, policy: crate::model::PolicyKind, reason: String },
}

/// What the resolver needs to know beyond the conflict itself.
#[derive(Debug, Clone)]
pub struct ResolutionContext<'a> {
    pub first_names: BTreeMap<UserId, String>,
    pub rules: &'a [Rule],
}

impl<'a> ResolutionContext<'a> {
    pub fn new(first_names: BTreeMap<UserId, String>, rules: &'a [Rule]) -> Self {
        Self { first_names, rules }
    }

    pub fn from_scenario(s: &'a Scenario) -> Self {
        Self::new(s.first_names(), &s.rules)
    }

    fn name_key(&self, user: &UserId) -> (String, UserId) {
        let name = self.first_names.get(user).map(|n| n.to_lowercase()).unwrap_or_else(|| user.as_str().to_lowercase());
        (name, user.clone())
    }

    fn name(&self, user: &UserId) -> String {
        self.first_names.get(user).cloned().unwrap_or_else(|| user.to_string())
    }

    fn rule(&self, id: &RuleId) -> Option<&'a Rule> {
        self.rules.iter().find(|r| &r.rule_id == id)
    }

    /// Schedule entries of `user` among the conflict's rules.
    fn entries_of(&self, conflict: &Conflict, user: &UserId) -> Vec<(&'a RuleId, &'a ScheduleEntry)> {
        conflict
            .rule_ids
            .iter()
            .filter_map(|id| self.rule(id))
            .filter(|r| &r.owner == user)
            .filter_map(|r| r.schedule().map(|e| (&r.rule_id, e)))
            .collect()
    }

    /// Activity classes that make a participant's claim in this conflict.
    fn classes_of(&self, conflict: &Conflict, user: &UserId) -> Vec<&'a ActivityClass> {
        let mut classes = Vec::new();
        for r in conflict.rule_ids.iter().filter_map(|id| self.rule(id)).filter(|r| &r.owner == user) {
            if let Some(e) = r.schedule() {
                classes.push(&e.activity_class);
            } else if let Some(Condition::Activity { activity }) = r.constraint().and_then(|c| c.condition.as_ref()) {
                classes.extend(
                    self.rules
                        .iter()
                        .filter(|o| o.owner == *user)
                        .filter_map(|o| o.schedule())
                        .filter(|e| {
                            e.activity.eq_ignore_ascii_case(activity)
                                && e.day == conflict.context.day
                                && e.window().overlaps(&conflict.context.window())
                        })
                        .map(|e| &e.activity_class),
                );
            }
        }
        classes
    }

    /// True when no schedule rule books `resource` during the window.
    fn resource_free(&self, resource: &str, entry: &ScheduleEntry) -> bool {
        !self.rules.iter().filter_map(|r| r.schedule()).any(|e| {
            e.day == entry.day && e.resource.as_deref() == Some(resource) && e.window().overlaps(&entry.window())
        })
    }
}

/// Applies a resolution policy to one detected conflict.
///
/// * Activity priority: the participant whose activity ranks highest wins;
///   ties go to the tiebreak variant, or alphabetical first name.
/// * Alphabetical first name: the case-insensitively smallest first name wins.
/// * Escalate to discussion: no winner.
///
/// Losers of a resource contention move to the next free resource in the
/// policy's resource order, else to another time. Losers of a schedule
/// overlap are served after the winner.
pub fn resolve(
    conflict: &Conflict,
    policy: &ResolutionPolicy,
    ctx: &ResolutionContext<'_>,
) -> Result<Resolution, ResolveError> {
    let participants: Vec<&UserId> = conflict.participants.iter().collect();
    let policy_kind = policy.variant.kind();

    let decided = match &policy.variant {
        PolicyVariant::EscalateToDiscussion => None,
        PolicyVariant::AlphabeticalFirstName => Some((alphabetical(&participants, ctx), None)),
        PolicyVariant::ActivityPriority { order } => {
            let rank = |c: &ActivityClass| order.iter().position(|o| o == c).unwrap_or(order.len());
            let mut best: Vec<(usize, &UserId)> = Vec::new();
            for u in &participants {
                let classes = ctx.classes_of(conflict, u);
                let Some(r) = classes.iter().map(|c| rank(c)).min() else {
                    return Err(ResolveError::PolicyInapplicable {
                        conflict: conflict.conflict_id.to_string(),
                        policy: policy_kind,
                        reason: format!("{} has no activity class in this conflict", ctx.name(u)),
                    });
                };
                best.push((r, u));
            }
            let top = best.iter().map(|(r, _)| *r).min().expect("participants");
            let tied: Vec<&UserId> = best.iter().filter(|(r, _)| *r == top).map(|(_, u)| *u).collect();
            if tied.len() == 1 {
                let class = order.get(top).map(|c| c.to_string()).unwrap_or_default();
                Some((tied[0].clone(), Some(class)))
            } else {
                match &policy.tiebreak {
                    Some(PolicyVariant::EscalateToDiscussion) => None,
                    _ => Some((alphabetical(&tied, ctx), None)),
                }
            }
        }
    };

    let Some((winner, winning_class)) = decided else {
        return Ok(Resolution {
            conflict_id: conflict.conflict_id.clone(),
            policy_applied: policy_kind,
            outcome: Outcome::Escalated,
            rationale: format!("{} is left for discussion among {}.", describe(conflict), names(&participants, ctx)),
        });
    };

    let mut reassignments = Vec::new();
    let mut taken: BTreeSet<String> = BTreeSet::new();
    let mut losers: Vec<&UserId> = participants.iter().copied().filter(|u| **u != winner).collect();
    losers.sort_by_key(|u| ctx.name_key(u));
    for loser in losers {
        let entries = ctx.entries_of(conflict, loser);
        let rule_ids: Vec<RuleId> =
            conflict.rule_ids.iter().filter(|id| ctx.rule(id).is_some_and(|r| &r.owner == loser)).cloned().collect();
        let target = match conflict.kind {
            ConflictKind::ResourceContention => {
                let contested = conflict.context.resource.as_deref().unwrap_or_default();
                let next = policy
                    .resource_priority
                    .iter()
                    .skip_while(|r| r.as_str() != contested)
                    .skip(1)
                    .find(|r| !taken.contains(*r) && entries.iter().all(|(_, e)| ctx.resource_free(r, e)));
                match next {
                    Some(r) => {
                        taken.insert(r.clone());
                        Some(ReassignTarget::Resource { name: r.clone() })
                    }
                    None => Some(ReassignTarget::AnotherTime),
                }
            }
            ConflictKind::ScheduleOverlap => Some(ReassignTarget::AfterWinner),
            ConflictKind::ConstraintContradiction => None,
        };
        if let Some(target) = target {
            reassignments.push(Reassignment { user: loser.clone(), rule_ids, target });
        }
    }

    let reason = match (&policy.variant, winning_class) {
        (PolicyVariant::ActivityPriority { .. }, Some(class)) => {
            format!("{class} has the highest activity priority")
        }
        (PolicyVariant::ActivityPriority { .. }, None) => {
            "activities tie on priority, so first names decide alphabetically".to_string()
        }
        _ => "residents are served in alphabetical order of first name".to_string(),
    };
    let mut rationale = format!("{}: {} goes first because {reason}.", describe(conflict), ctx.name(&winner));
    for r in &reassignments {
        let what = match &r.target {
            ReassignTarget::Resource { name } => format!("moves to the {name}"),
            ReassignTarget::AnotherTime => "needs another time".to_string(),
            ReassignTarget::AfterWinner => "is served right after".to_string(),
        };
        rationale.push_str(&format!(" {} {what}.", ctx.name(&r.user)));
    }

    Ok(Resolution {
        conflict_id: conflict.conflict_id.clone(),
        policy_applied: policy_kind,
        outcome: Outcome::Winner { user: winner, reassignments },
        rationale,
    })
}

fn alphabetical(users: &[&UserId], ctx: &ResolutionContext<'_>) -> UserId {
    users.iter().min_by_key(|u| ctx.name_key(u)).map(|u| (*u).clone()).expect("at least one participant")
}

fn names(users: &[&UserId], ctx: &ResolutionContext<'_>) -> String {
    let mut names: Vec<String> = users.iter().map(|u| ctx.name(u)).collect();
    names.sort();
    names.join(" and ")
}

fn describe(c: &Conflict) -> String {
    let what = match c.kind {
        ConflictKind::ResourceContention => {
            format!("Both want the {}", c.context.resource.as_deref().unwrap_or("same resource"))
        }
        ConflictKind::ScheduleOverlap => "Both need assistance at the same time".to_string(),
        ConflictKind::ConstraintContradiction => format!(
            "Incompatible {} requests{}",
            c.context.attribute.as_deref().unwrap_or("setting"),
            c.context.resource.as_ref().map(|z| format!(" for the {z}")).unwrap_or_default()
        ),
    };
    format!("{what} on {} {}", c.context.day, c.context.window())
}
