use std::collections::BTreeMap;

use schemars::JsonSchema;
use serde::{Deserialize, Serialize};

use super::ids::{RuleId, UserId};
use super::plan::{Conflict, PlanSet, Resolution};
use super::rule::{ResolutionPolicy, Rule, UserProfile};
use super::time::Weekday;

/// Counts every bundled scenario must match.
pub const BUNDLED_USERS: usize = 3;
pub const BUNDLED_RULES: usize = 60;
pub const BUNDLED_CONFLICTS: usize = 12;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, JsonSchema)]
pub struct Scenario {
    pub name: String,
    /// Short machine name, e.g. `workplace`.
    pub slug: String,
    #[serde(default)]
    pub description: String,
    /// Bundled scenarios are held to the fixed cardinalities.
    #[serde(default)]
    pub bundled: bool,
    #[serde(default = "default_horizon")]
    pub horizon: Vec<Weekday>,
    pub users: Vec<UserProfile>,
    pub rules: Vec<Rule>,
    pub policy: ResolutionPolicy,
    /// One prose document per user. Rendered from the rules when absent.
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub documents: BTreeMap<UserId, String>,
    pub reference: ReferenceSolution,
}

fn default_horizon() -> Vec<Weekday> {
    Weekday::WORKWEEK.to_vec()
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize, JsonSchema)]
pub struct ReferenceSolution {
    #[serde(default)]
    pub plans: PlanSet,
    #[serde(default)]
    pub conflicts: Vec<ExpectedConflict>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, JsonSchema)]
pub struct ExpectedConflict {
    pub conflict: Conflict,
    pub resolution: Resolution,
}

impl Scenario {
    pub fn user(&self, id: &UserId) -> Option<&UserProfile> {
        self.users.iter().find(|u| &u.user_id == id)
    }

    pub fn user_by_first_name(&self, name: &str) -> Option<&UserProfile> {
        self.users.iter().find(|u| u.first_name.eq_ignore_ascii_case(name))
    }

    pub fn rule(&self, id: &RuleId) -> Option<&Rule> {
        self.rules.iter().find(|r| &r.rule_id == id)
    }

    pub fn rules_of<'a>(&'a self, user: &'a UserId) -> impl Iterator<Item = &'a Rule> + 'a {
        self.rules.iter().filter(move |r| &r.owner == user)
    }

    pub fn first_names(&self) -> BTreeMap<UserId, String> {
        self.users.iter().map(|u| (u.user_id.clone(), u.first_name.clone())).collect()
    }
}
