use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use schemars::JsonSchema;
use serde::{Deserialize, Serialize};

use super::ids::{ConflictId, RuleId, UserId};
use super::rule::{PolicyKind, Setting};
use super::time::{clock, Minute, TimeWindow, Weekday};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize, JsonSchema)]
pub enum ConflictKind {
    ResourceContention,
    ConstraintContradiction,
    ScheduleOverlap,
}

impl ConflictKind {
    pub fn code(self) -> &'static str {
        match self {
            ConflictKind::ResourceContention => "RC",
            ConflictKind::ConstraintContradiction => "CC",
            ConflictKind::ScheduleOverlap => "SO",
        }
    }
}

/// Where and when a conflict happens.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize, JsonSchema)]
pub struct ConflictContext {
    pub day: Weekday,
    pub start: Minute,
    pub end: Minute,
    /// Contested resource, or the zone of a constraint contradiction.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub resource: Option<String>,
    /// Attribute of a constraint contradiction.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub attribute: Option<String>,
}

impl ConflictContext {
    pub fn window(&self) -> TimeWindow {
        TimeWindow::new(self.start, self.end)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize, JsonSchema)]
pub struct Conflict {
    pub conflict_id: ConflictId,
    pub kind: ConflictKind,
    pub participants: BTreeSet<UserId>,
    pub rule_ids: BTreeSet<RuleId>,
    pub context: ConflictContext,
}

impl Conflict {
    /// Builds a conflict whose id is derived from its kind, context and rules.
    pub fn new(
        kind: ConflictKind,
        participants: BTreeSet<UserId>,
        rule_ids: BTreeSet<RuleId>,
        context: ConflictContext,
    ) -> Self {
        let rules: Vec<&str> = rule_ids.iter().map(RuleId::as_str).collect();
        let conflict_id = ConflictId(format!(
            "{}:{}:{}-{}:{}",
            kind.code(),
            context.day,
            clock(context.start),
            clock(context.end),
            rules.join("+")
        ));
        Self { conflict_id, kind, participants, rule_ids, context }
    }
}

impl fmt::Display for Conflict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let who: Vec<&str> = self.participants.iter().map(UserId::as_str).collect();
        write!(f, "{:?} on {} {} between {}", self.kind, self.context.day, self.context.window(), who.join(", "))?;
        if let Some(r) = &self.context.resource {
            write!(f, " ({r})")?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize, JsonSchema)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum ReassignTarget {
    /// Moved to the named resource at the same time.
    Resource { name: String },
    /// No resource is free; the plan should propose another time.
    AnotherTime,
    /// Served once the winner's activity is finished.
    AfterWinner,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize, JsonSchema)]
pub struct Reassignment {
    pub user: UserId,
    pub rule_ids: Vec<RuleId>,
    pub target: ReassignTarget,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize, JsonSchema)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum Outcome {
    Winner {
        user: UserId,
        #[serde(default)]
        reassignments: Vec<Reassignment>,
    },
    Escalated,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize, JsonSchema)]
pub struct Resolution {
    pub conflict_id: ConflictId,
    pub policy_applied: PolicyKind,
    pub outcome: Outcome,
    #[serde(default)]
    pub rationale: String,
}

impl Resolution {
    pub fn winner(&self) -> Option<&UserId> {
        match &self.outcome {
            Outcome::Winner { user, .. } => Some(user),
            Outcome::Escalated => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, JsonSchema)]
pub struct PlanAction {
    pub start: Minute,
    pub end: Minute,
    pub description: String,
    /// Users affected by the action.
    #[serde(default)]
    pub users: Vec<UserId>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub resource: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub setting: Option<Setting>,
    /// Flagged for discussion among the affected users.
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    pub escalated: bool,
    #[serde(default)]
    pub satisfied_rules: Vec<RuleId>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub resolved_conflicts: Vec<ConflictId>,
}

impl PlanAction {
    pub fn window(&self) -> TimeWindow {
        TimeWindow::new(self.start, self.end)
    }

    pub fn involves(&self, user: &UserId) -> bool {
        self.users.contains(user)
    }

    pub fn mentions(&self, keyword: &str) -> bool {
        self.description.to_lowercase().contains(&keyword.to_lowercase())
    }

    pub fn mentions_all<S: AsRef<str>>(&self, keywords: &[S]) -> bool {
        let desc = self.description.to_lowercase();
        keywords.iter().all(|k| desc.contains(&k.as_ref().to_lowercase()))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, JsonSchema)]
pub struct Plan {
    pub day: Weekday,
    #[serde(default)]
    pub actions: Vec<PlanAction>,
}

impl Plan {
    pub fn empty(day: Weekday) -> Self {
        Self { day, actions: Vec::new() }
    }

    pub fn is_sorted(&self) -> bool {
        self.actions.windows(2).all(|w| w[0].start <= w[1].start)
    }

    /// Stable sort by start time.
    pub fn sort(&mut self) {
        self.actions.sort_by_key(|a| a.start);
    }
}

pub type PlanSet = BTreeMap<Weekday, Plan>;
