use schemars::JsonSchema;
use serde::{Deserialize, Serialize};

use super::ids::UserId;
use super::rule::Comparator;
use super::time::{Minute, Weekday};

fn one() -> usize {
    1
}

fn is_one(n: &usize) -> bool {
    *n == 1
}

/// Satisfaction test for a rule, evaluated against a set of day plans.
///
/// Keyword matching is case-insensitive substring matching on an action's
/// description. Predicates test observable effects of a plan, never the rule
/// ids an action claims to satisfy.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, JsonSchema)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum PlanPredicate {
    /// Some action on `day` involves `user` and mentions every keyword.
    Action(ActionSpec),
    /// Every action (of `user`, if given) whose description mentions all
    /// `filter` keywords also mentions all `require` keywords and, when
    /// `resource_in` is non-empty, uses one of those resources. At least
    /// `min` actions must match the filter.
    EveryAction {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        user: Option<UserId>,
        #[serde(default)]
        filter: Vec<String>,
        #[serde(default)]
        require: Vec<String>,
        #[serde(default, skip_serializing_if = "Vec::is_empty")]
        resource_in: Vec<String>,
        #[serde(default = "one", skip_serializing_if = "is_one")]
        min: usize,
    },
    /// Settings of `attribute` in `zone` cover `[start, end)` on `day` and
    /// each satisfies the comparison.
    Setting {
        day: Weekday,
        start: Minute,
        end: Minute,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        zone: Option<String>,
        attribute: String,
        comparator: Comparator,
        value: f64,
    },
    /// Every setting of `attribute` (in `zone`, if given) satisfies the
    /// comparison; at least `min` settings exist.
    AllSettings {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        zone: Option<String>,
        attribute: String,
        comparator: Comparator,
        value: f64,
        #[serde(default = "one", skip_serializing_if = "is_one")]
        min: usize,
    },
    /// No action (of `user`, if given, matching `filter`) starts before
    /// `not_before` or ends after `not_after`.
    WithinHours {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        user: Option<UserId>,
        #[serde(default, skip_serializing_if = "Vec::is_empty")]
        filter: Vec<String>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        not_before: Option<Minute>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        not_after: Option<Minute>,
    },
    /// An escalated action on `day` overlaps `[start, end)` and involves all
    /// of `users`.
    Escalated {
        day: Weekday,
        start: Minute,
        end: Minute,
        #[serde(default)]
        users: Vec<UserId>,
    },
    AllOf {
        predicates: Vec<PlanPredicate>,
    },
    AnyOf {
        predicates: Vec<PlanPredicate>,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, JsonSchema)]
pub struct ActionSpec {
    pub day: Weekday,
    pub user: UserId,
    #[serde(default)]
    pub keywords: Vec<String>,
    /// Exact start, when the rule pins it.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub start: Option<Minute>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub end: Option<Minute>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub start_at_or_after: Option<Minute>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub resource_in: Vec<String>,
}
