use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use super::detect::detect_conflicts;
use super::resolve::{resolve, ResolutionContext};
use crate::model::{
    ActionSpec, Comparator, Conflict, ConflictId, ConflictKind, Outcome, Plan, PlanAction, PlanPredicate, PlanSet,
    ReassignTarget, Resolution, ResolutionPolicy, Rule, RuleId, Scenario, TimeWindow, UserId, Weekday,
};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum CheckError {
    #[error("rule {0} has no plan predicate")]
    MissingChecker(RuleId),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum Violation {
    RuleUnsatisfied { rule_id: RuleId, detail: String },
    ConflictMishandled { conflict_id: ConflictId, detail: String },
}

impl Violation {
    pub fn conflict_id(&self) -> Option<&ConflictId> {
        match self {
            Violation::ConflictMishandled { conflict_id, .. } => Some(conflict_id),
            Violation::RuleUnsatisfied { .. } => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct PlanReport {
    pub violations: Vec<Violation>,
    pub satisfied_rule_ids: BTreeSet<RuleId>,
    pub resolved_conflict_ids: BTreeSet<ConflictId>,
    /// Conflicts the rules give rise to on the horizon.
    pub conflicts_checked: usize,
}

impl PlanReport {
    pub fn conflict_violations(&self) -> impl Iterator<Item = &ConflictId> {
        self.violations.iter().filter_map(Violation::conflict_id)
    }
}

/// Checks plans against a rule set: every rule's predicate, and for every
/// conflict the rules imply, a treatment consistent with the policy.
///
/// A conflict is credited only when its treatment is right *and* all the
/// rules involved in it are satisfied.
pub struct PlanValidator<'a> {
    rules: &'a [Rule],
    policy: &'a ResolutionPolicy,
    ctx: ResolutionContext<'a>,
    horizon: Vec<Weekday>,
}

impl<'a> PlanValidator<'a> {
    pub fn new(
        rules: &'a [Rule],
        policy: &'a ResolutionPolicy,
        first_names: BTreeMap<UserId, String>,
        horizon: &[Weekday],
    ) -> Self {
        Self { rules, policy, ctx: ResolutionContext::new(first_names, rules), horizon: horizon.to_vec() }
    }

    pub fn for_scenario(s: &'a Scenario) -> Self {
        Self::new(&s.rules, &s.policy, s.first_names(), &s.horizon)
    }

    pub fn validate(&self, plans: &PlanSet) -> Result<PlanReport, CheckError> {
        let mut report = PlanReport::default();
        for rule in self.rules {
            let pred = rule.checker.as_ref().ok_or_else(|| CheckError::MissingChecker(rule.rule_id.clone()))?;
            if eval(pred, plans) {
                report.satisfied_rule_ids.insert(rule.rule_id.clone());
            } else {
                report.violations.push(Violation::RuleUnsatisfied {
                    rule_id: rule.rule_id.clone(),
                    detail: format!("not reflected in the plans: {}", rule.text),
                });
            }
        }

        let conflicts = detect_conflicts(self.rules, &self.horizon);
        report.conflicts_checked = conflicts.len();
        for conflict in &conflicts {
            let verdict = match resolve(conflict, self.policy, &self.ctx) {
                Ok(res) => self.treatment(conflict, &res, plans),
                Err(e) => Err(e.to_string()),
            };
            let verdict = verdict.and_then(|()| {
                let missing: Vec<&str> = conflict
                    .rule_ids
                    .iter()
                    .filter(|r| !report.satisfied_rule_ids.contains(*r))
                    .map(RuleId::as_str)
                    .collect();
                if missing.is_empty() {
                    Ok(())
                } else {
                    Err(format!("involved rules not satisfied: {}", missing.join(", ")))
                }
            });
            match verdict {
                Ok(()) => {
                    report.resolved_conflict_ids.insert(conflict.conflict_id.clone());
                }
                Err(detail) => report
                    .violations
                    .push(Violation::ConflictMishandled { conflict_id: conflict.conflict_id.clone(), detail }),
            }
        }
        Ok(report)
    }

    /// Is the conflict handled in the plans the way the resolution says?
    fn treatment(&self, c: &Conflict, res: &Resolution, plans: &PlanSet) -> Result<(), String> {
        let plan = plans.get(&c.context.day).ok_or_else(|| format!("no plan for {}", c.context.day))?;
        let window = c.context.window();

        let (winner, reassignments) = match &res.outcome {
            Outcome::Escalated => {
                let flagged = plan.actions.iter().any(|a| {
                    a.escalated && a.window().overlaps(&window) && c.participants.iter().all(|u| a.involves(u))
                });
                if !flagged {
                    return Err("conflict was not flagged for discussion".into());
                }
                if let (Some(fallback), Some(attr)) = (&self.policy.fallback, &c.context.attribute) {
                    if fallback.attribute.eq_ignore_ascii_case(attr) {
                        let off = settings_in(plan, attr, c.context.resource.as_deref(), &window)
                            .any(|a| a.setting.as_ref().is_some_and(|s| s.value != fallback.value));
                        if off {
                            return Err(format!(
                                "a side was applied while awaiting discussion (expected {})",
                                fallback.value
                            ));
                        }
                    }
                }
                return Ok(());
            }
            Outcome::Winner { user, reassignments } => (user, reassignments),
        };

        match c.kind {
            ConflictKind::ResourceContention => {
                let resource = c.context.resource.as_deref().unwrap_or_default();
                let holders: Vec<&PlanAction> = plan
                    .actions
                    .iter()
                    .filter(|a| a.resource.as_deref() == Some(resource) && a.window().overlaps(&window))
                    .collect();
                for (i, a) in holders.iter().enumerate() {
                    for b in &holders[i + 1..] {
                        if a.window().overlaps(&b.window()) {
                            return Err(format!("{resource} is double-booked"));
                        }
                    }
                }
                for (rid, entry) in self.entries(c, winner) {
                    let ok = candidates(plan, winner, &entry.activity)
                        .any(|a| a.resource.as_deref() == Some(resource) && a.window().overlaps(&entry.window()));
                    if !ok {
                        return Err(format!("winner's {rid} does not hold the {resource}"));
                    }
                }
                for r in reassignments {
                    for (rid, entry) in self.entries(c, &r.user) {
                        let mut cands = candidates(plan, &r.user, &entry.activity);
                        let ok = match &r.target {
                            ReassignTarget::Resource { name } => cands.any(|a| {
                                a.resource.as_deref() == Some(name.as_str()) && a.window().overlaps(&entry.window())
                            }),
                            ReassignTarget::AnotherTime => cands.any(|a| !a.window().overlaps(&window)),
                            ReassignTarget::AfterWinner => true,
                        };
                        if !ok {
                            return Err(format!("{rid} was not reassigned as {:?}", r.target));
                        }
                        let still_there = candidates(plan, &r.user, &entry.activity)
                            .any(|a| a.resource.as_deref() == Some(resource) && a.window().overlaps(&window));
                        if still_there {
                            return Err(format!("{rid} still occupies the {resource}"));
                        }
                    }
                }
                Ok(())
            }
            ConflictKind::ScheduleOverlap => {
                let mut served_windows = Vec::new();
                for (rid, entry) in self.entries(c, winner) {
                    let served = candidates(plan, winner, &entry.activity)
                        .find(|a| a.start == entry.start)
                        .ok_or_else(|| format!("winner's {rid} is not served on time"))?;
                    served_windows.push(served.window());
                }
                let winner_end =
                    served_windows.iter().map(|w| w.end).max().ok_or("winner has no entry in the conflict")?;
                for r in reassignments {
                    for (rid, entry) in self.entries(c, &r.user) {
                        let mut cands = candidates(plan, &r.user, &entry.activity);
                        if !cands.any(|a| a.start >= winner_end) {
                            return Err(format!("{rid} is not served after the winner"));
                        }
                        let clash = candidates(plan, &r.user, &entry.activity)
                            .any(|a| served_windows.iter().any(|w| w.overlaps(&a.window())));
                        if clash {
                            return Err(format!("{rid} is served at the same time as the winner"));
                        }
                    }
                }
                Ok(())
            }
            ConflictKind::ConstraintContradiction => {
                let attr = c.context.attribute.as_deref().unwrap_or_default();
                let zone = c.context.resource.as_deref();
                for rid in c.rule_ids.iter() {
                    let Some(rule) = self.rules.iter().find(|r| &r.rule_id == rid) else {
                        continue;
                    };
                    if &rule.owner != winner {
                        continue;
                    }
                    let Some(con) = rule.constraint() else { continue };
                    if !settings_hold(plan, attr, zone, &window, con.comparator, con.value) {
                        return Err(format!("winner's {rid} is not applied during the conflict"));
                    }
                }
                Ok(())
            }
        }
    }

    fn entries<'s>(
        &'s self,
        c: &'s Conflict,
        user: &'s UserId,
    ) -> impl Iterator<Item = (&'s RuleId, &'s crate::model::ScheduleEntry)> + 's {
        c.rule_ids.iter().filter_map(move |id| {
            self.rules
                .iter()
                .find(|r| &r.rule_id == id && &r.owner == user)
                .and_then(|r| r.schedule().map(|e| (&r.rule_id, e)))
        })
    }
}

/// Convenience wrapper over [`PlanValidator`] for a whole scenario.
pub fn validate_plan(plans: &PlanSet, scenario: &Scenario) -> Result<PlanReport, CheckError> {
    PlanValidator::for_scenario(scenario).validate(plans)
}

fn candidates<'p>(plan: &'p Plan, user: &'p UserId, activity: &'p str) -> impl Iterator<Item = &'p PlanAction> + 'p {
    plan.actions.iter().filter(move |a| a.involves(user) && a.mentions(activity))
}

fn zone_eq(a: Option<&str>, b: Option<&str>) -> bool {
    match (a, b) {
        (None, None) => true,
        (Some(x), Some(y)) => x.eq_ignore_ascii_case(y),
        _ => false,
    }
}

fn settings_in<'p>(
    plan: &'p Plan,
    attribute: &'p str,
    zone: Option<&'p str>,
    window: &'p TimeWindow,
) -> impl Iterator<Item = &'p PlanAction> + 'p {
    plan.actions.iter().filter(move |a| {
        a.window().overlaps(window)
            && a.setting
                .as_ref()
                .is_some_and(|s| s.attribute.eq_ignore_ascii_case(attribute) && zone_eq(s.zone.as_deref(), zone))
    })
}

/// Settings cover `window` completely and each satisfies the comparison.
fn settings_hold(
    plan: &Plan,
    attribute: &str,
    zone: Option<&str>,
    window: &TimeWindow,
    comparator: Comparator,
    value: f64,
) -> bool {
    let mut covering: Vec<TimeWindow> = Vec::new();
    for a in settings_in(plan, attribute, zone, window) {
        let s = a.setting.as_ref().expect("filtered on setting");
        if !comparator.holds(s.value, value) {
            return false;
        }
        covering.push(a.window());
    }
    covering.sort();
    let mut reached = window.start;
    for w in covering {
        if w.start > reached {
            break;
        }
        reached = reached.max(w.end);
    }
    reached >= window.end
}

/// Evaluates a predicate against a plan set.
pub fn eval(pred: &PlanPredicate, plans: &PlanSet) -> bool {
    let all_actions = || plans.values().flat_map(|p| p.actions.iter());
    match pred {
        PlanPredicate::Action(spec) => {
            plans.get(&spec.day).is_some_and(|p| p.actions.iter().any(|a| action_matches(spec, a)))
        }
        PlanPredicate::EveryAction { user, filter, require, resource_in, min } => {
            let matching: Vec<&PlanAction> = all_actions()
                .filter(|a| user.as_ref().is_none_or(|u| a.involves(u)) && a.mentions_all(filter))
                .collect();
            matching.len() >= *min
                && matching.iter().all(|a| {
                    a.mentions_all(require)
                        && (resource_in.is_empty() || a.resource.as_ref().is_some_and(|r| resource_in.contains(r)))
                })
        }
        PlanPredicate::Setting { day, start, end, zone, attribute, comparator, value } => {
            plans.get(day).is_some_and(|p| {
                settings_hold(p, attribute, zone.as_deref(), &TimeWindow::new(*start, *end), *comparator, *value)
            })
        }
        PlanPredicate::AllSettings { zone, attribute, comparator, value, min } => {
            let settings: Vec<f64> = all_actions()
                .filter_map(|a| a.setting.as_ref())
                .filter(|s| {
                    s.attribute.eq_ignore_ascii_case(attribute)
                        && zone.as_deref().is_none_or(|z| zone_eq(s.zone.as_deref(), Some(z)))
                })
                .map(|s| s.value)
                .collect();
            settings.len() >= *min && settings.iter().all(|v| comparator.holds(*v, *value))
        }
        PlanPredicate::WithinHours { user, filter, not_before, not_after } => {
            let matching: Vec<&PlanAction> = all_actions()
                .filter(|a| user.as_ref().is_none_or(|u| a.involves(u)) && a.mentions_all(filter))
                .collect();
            !matching.is_empty()
                && matching
                    .iter()
                    .all(|a| not_before.is_none_or(|t| a.start >= t) && not_after.is_none_or(|t| a.end <= t))
        }
        PlanPredicate::Escalated { day, start, end, users } => plans.get(day).is_some_and(|p| {
            let w = TimeWindow::new(*start, *end);
            p.actions.iter().any(|a| a.escalated && a.window().overlaps(&w) && users.iter().all(|u| a.involves(u)))
        }),
        PlanPredicate::AllOf { predicates } => predicates.iter().all(|p| eval(p, plans)),
        PlanPredicate::AnyOf { predicates } => predicates.iter().any(|p| eval(p, plans)),
    }
}

fn action_matches(spec: &ActionSpec, a: &PlanAction) -> bool {
    a.involves(&spec.user)
        && a.mentions_all(&spec.keywords)
        && spec.start.is_none_or(|s| a.start == s)
        && spec.end.is_none_or(|e| a.end == e)
        && spec.start_at_or_after.is_none_or(|s| a.start >= s)
        && (spec.resource_in.is_empty() || a.resource.as_ref().is_some_and(|r| spec.resource_in.contains(r)))
}
