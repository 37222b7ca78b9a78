use std::fmt;

use schemars::JsonSchema;
use serde::{Deserialize, Serialize};

use super::ids::{RuleId, UserId};
use super::predicate::PlanPredicate;
use super::time::{Minute, TimeWindow, Weekday};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, JsonSchema)]
pub struct UserProfile {
    pub user_id: UserId,
    pub first_name: String,
    /// Ids of the rules owned by this user.
    #[serde(default)]
    pub rules: Vec<RuleId>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, JsonSchema)]
pub enum RuleKind {
    Schedule,
    Preference,
    Policy,
}

impl RuleKind {
    pub const ALL: [RuleKind; 3] = [RuleKind::Schedule, RuleKind::Preference, RuleKind::Policy];
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, JsonSchema)]
pub struct Rule {
    pub rule_id: RuleId,
    pub owner: UserId,
    pub kind: RuleKind,
    /// Natural-language statement of the rule, as the user wrote it.
    pub text: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub payload: Option<Payload>,
    /// Machine-checkable satisfaction test used by evaluation.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub checker: Option<PlanPredicate>,
}

impl Rule {
    pub fn schedule(&self) -> Option<&ScheduleEntry> {
        match &self.payload {
            Some(Payload::Schedule(e)) => Some(e),
            _ => None,
        }
    }

    pub fn constraint(&self) -> Option<&Constraint> {
        match &self.payload {
            Some(Payload::Constraint(c)) => Some(c),
            _ => None,
        }
    }

    pub fn policy(&self) -> Option<&ResolutionPolicy> {
        match &self.payload {
            Some(Payload::Policy(p)) => Some(p),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, JsonSchema)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum Payload {
    Schedule(ScheduleEntry),
    Constraint(Constraint),
    Policy(ResolutionPolicy),
}

impl Payload {
    pub fn matches_kind(&self, kind: RuleKind) -> bool {
        matches!(
            (self, kind),
            (Payload::Schedule(_), RuleKind::Schedule)
                | (Payload::Constraint(_), RuleKind::Preference)
                | (Payload::Policy(_), RuleKind::Policy)
        )
    }
}

/// Activity class used by priority policies. The workplace classes are
/// provided as constructors; scenarios may define their own.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize, JsonSchema)]
#[serde(transparent)]
pub struct ActivityClass(pub String);

impl ActivityClass {
    pub fn new(name: impl Into<String>) -> Self {
        Self(name.into())
    }
    pub fn client_consultation() -> Self {
        Self::new("ClientConsultation")
    }
    pub fn team_meeting() -> Self {
        Self::new("TeamMeeting")
    }
    pub fn brainstorming() -> Self {
        Self::new("Brainstorming")
    }
    pub fn other() -> Self {
        Self::new("Other")
    }
}

impl fmt::Display for ActivityClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize, JsonSchema)]
pub struct ScheduleEntry {
    pub day: Weekday,
    pub start: Minute,
    pub end: Minute,
    /// Short label; plan actions serving this entry mention it verbatim.
    pub activity: String,
    pub activity_class: ActivityClass,
    /// Room or zone the entry occupies. Entries without a resource occupy
    /// the shared assistant itself.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub resource: Option<String>,
}

impl ScheduleEntry {
    pub fn window(&self) -> TimeWindow {
        TimeWindow::new(self.start, self.end)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, JsonSchema)]
pub enum Comparator {
    LE,
    GE,
    EQ,
}

impl Comparator {
    pub fn holds(self, actual: f64, bound: f64) -> bool {
        match self {
            Comparator::LE => actual <= bound,
            Comparator::GE => actual >= bound,
            Comparator::EQ => actual == bound,
        }
    }

    pub fn symbol(self) -> &'static str {
        match self {
            Comparator::LE => "<=",
            Comparator::GE => ">=",
            Comparator::EQ => "=",
        }
    }
}

/// Attributes whose values are physical quantities and must carry a unit.
pub const PHYSICAL_ATTRIBUTES: &[&str] = &["temperature"];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, JsonSchema)]
pub struct Constraint {
    pub attribute: String,
    pub comparator: Comparator,
    pub value: f64,
    /// Unit tag kept verbatim from the scenario file (e.g. `F`).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub unit: Option<String>,
    /// Zone the constraint applies to; `None` means every zone.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub zone: Option<String>,
    /// When the constraint applies; `None` means always.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub condition: Option<Condition>,
}

impl Constraint {
    pub fn is_physical(&self) -> bool {
        PHYSICAL_ATTRIBUTES.iter().any(|a| a.eq_ignore_ascii_case(&self.attribute))
    }

    /// True when some value satisfies both constraints.
    pub fn compatible_with(&self, other: &Constraint) -> bool {
        use Comparator::*;
        let (a, b) = (self.value, other.value);
        match (self.comparator, other.comparator) {
            (LE, LE) | (GE, GE) => true,
            (LE, GE) => b <= a,
            (GE, LE) => a <= b,
            (EQ, EQ) => a == b,
            (EQ, c) => c.holds(a, b),
            (c, EQ) => c.holds(b, a),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize, JsonSchema)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum Condition {
    /// Applies on the listed days during `[start, end)`.
    Window { days: Vec<Weekday>, start: Minute, end: Minute },
    /// Applies whenever the owner has a schedule entry with this activity label.
    Activity { activity: String },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize, JsonSchema)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum PolicyVariant {
    /// Highest priority first.
    ActivityPriority {
        order: Vec<ActivityClass>,
    },
    AlphabeticalFirstName,
    EscalateToDiscussion,
}

impl PolicyVariant {
    pub fn kind(&self) -> PolicyKind {
        match self {
            PolicyVariant::ActivityPriority { .. } => PolicyKind::ActivityPriority,
            PolicyVariant::AlphabeticalFirstName => PolicyKind::AlphabeticalFirstName,
            PolicyVariant::EscalateToDiscussion => PolicyKind::EscalateToDiscussion,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, JsonSchema)]
pub enum PolicyKind {
    ActivityPriority,
    AlphabeticalFirstName,
    EscalateToDiscussion,
}

/// A value the plan falls back to while a conflict awaits discussion.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, JsonSchema)]
pub struct Setting {
    pub attribute: String,
    pub value: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub unit: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub zone: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, JsonSchema)]
pub struct ResolutionPolicy {
    pub variant: PolicyVariant,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tiebreak: Option<PolicyVariant>,
    /// Resources in the order losers of a contention are moved through.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub resource_priority: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fallback: Option<Setting>,
}

impl ResolutionPolicy {
    pub fn new(variant: PolicyVariant) -> Self {
        Self { variant, tiebreak: None, resource_priority: Vec::new(), fallback: None }
    }
}
