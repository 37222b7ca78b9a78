//! Bundled scenarios, scenario file loading and document rendering.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

use crate::model::{validate_scenario, RuleKind, Scenario, UserId, ValidationError};

const WORKPLACE: &str = include_str!("../../scenarios/workplace.scenario.json");
const ASSISTIVE_CARE: &str = include_str!("../../scenarios/assistive_care.scenario.json");
const SMARTHOME: &str = include_str!("../../scenarios/smarthome.scenario.json");

/// Slugs of the bundled scenarios, in presentation order.
pub const BUNDLED: [&str; 3] = ["workplace", "assistive_care", "smarthome"];

#[derive(Debug, thiserror::Error)]
pub enum ScenarioError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("parse error at line {line}, column {column} ({path}): {message}")]
    Parse {
        /// JSON path of the offending value, e.g. `rules[3].payload.start`.
        path: String,
        line: usize,
        column: usize,
        message: String,
    },
    #[error("scenario is invalid: {}", .0.iter().map(ToString::to_string).collect::<Vec<_>>().join("; "))]
    Invalid(Vec<ValidationError>),
    #[error("unknown scenario `{0}`")]
    Unknown(String),
}

/// Parses and validates a scenario from JSON text. Missing documents are
/// rendered from the rules.
pub fn parse_scenario(json: &str) -> Result<Scenario, ScenarioError> {
    let de = &mut serde_json::Deserializer::from_str(json);
    let mut scenario: Scenario = serde_path_to_error::deserialize(de).map_err(|e| {
        let path = e.path().to_string();
        let inner = e.into_inner();
        ScenarioError::Parse { path, line: inner.line(), column: inner.column(), message: inner.to_string() }
    })?;
    let errors = validate_scenario(&scenario);
    if !errors.is_empty() {
        return Err(ScenarioError::Invalid(errors));
    }
    if scenario.documents.is_empty() {
        scenario.documents = render_documents(&scenario);
    }
    Ok(scenario)
}

pub fn load_scenario(path: impl AsRef<Path>) -> Result<Scenario, ScenarioError> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path)
        .map_err(|source| ScenarioError::Io { path: path.display().to_string(), source })?;
    parse_scenario(&text)
}

/// Looks a bundled scenario up by slug or display name, ignoring case and
/// treating `-`, `_` and spaces alike.
pub fn bundled_scenario(name: &str) -> Result<Scenario, ScenarioError> {
    let norm = |s: &str| s.to_lowercase().replace(['-', ' '], "_");
    let wanted = norm(name);
    let text = match wanted.as_str() {
        "workplace" | "workplace_scheduling" => WORKPLACE,
        "assistive_care" | "assistive" | "assistive_care_robot" => ASSISTIVE_CARE,
        "smarthome" | "smart_home" | "smart_home_temperature_control" => SMARTHOME,
        _ => return Err(ScenarioError::Unknown(name.to_string())),
    };
    parse_scenario(text)
}

/// All bundled scenarios. The assets are checked by the test suite, so a
/// failure here is a build defect.
pub fn bundled() -> Vec<Scenario> {
    BUNDLED.iter().map(|slug| bundled_scenario(slug).unwrap_or_else(|e| panic!("bundled {slug}: {e}"))).collect()
}

/// Renders one prose document per user: a header, then each rule as a
/// sentence followed by its bracketed rule id, grouped by kind in rule order.
pub fn render_documents(s: &Scenario) -> BTreeMap<UserId, String> {
    s.users
        .iter()
        .map(|u| {
            let mut doc = format!("{}'s rules\n", u.first_name);
            for (kind, title) in [
                (RuleKind::Schedule, "schedule"),
                (RuleKind::Preference, "preferences"),
                (RuleKind::Policy, "policies"),
            ] {
                let rules: Vec<_> = s.rules_of(&u.user_id).filter(|r| r.kind == kind).collect();
                if rules.is_empty() {
                    continue;
                }
                let _ = write!(doc, "\n{}'s {title}:\n", u.first_name);
                for r in rules {
                    let _ = writeln!(doc, "{} [{}]", r.text.trim(), r.rule_id);
                }
            }
            (u.user_id.clone(), doc)
        })
        .collect()
}

/// JSON schema of the scenario file format.
pub fn scenario_schema() -> serde_json::Value {
    serde_json::to_value(schemars::schema_for!(Scenario)).expect("schema serializes")
}

#[cfg(test)]
mod tests;
