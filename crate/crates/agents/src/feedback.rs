use std::collections::BTreeMap;
use std::sync::LazyLock;

use mup_core::model::{parse_clock, Comparator, Minute, PlanPredicate, UserId};
use regex::Regex;
use serde::{Deserialize, Serialize};

/// A checkable constraint stated in user feedback.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum Directive {
    /// Matching actions must not start before / end after the given times.
    WithinHours {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        user: Option<UserId>,
        #[serde(default, skip_serializing_if = "Vec::is_empty")]
        filter: Vec<String>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        not_before: Option<Minute>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        not_after: Option<Minute>,
        /// The phrase the directive was read from.
        text: String,
    },
    /// A fixed temperature; `zone: None` means the whole home.
    Setting {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        zone: Option<String>,
        attribute: String,
        value: f64,
        text: String,
    },
}

impl Directive {
    /// The plan predicate that checks the directive.
    pub fn predicate(&self) -> PlanPredicate {
        match self {
            Directive::WithinHours { user, filter, not_before, not_after, .. } => PlanPredicate::WithinHours {
                user: user.clone(),
                filter: filter.clone(),
                not_before: *not_before,
                not_after: *not_after,
            },
            Directive::Setting { zone, attribute, value, .. } => PlanPredicate::AllSettings {
                zone: zone.clone(),
                attribute: attribute.clone(),
                comparator: Comparator::EQ,
                value: *value,
                min: 0,
            },
        }
    }

    pub fn text(&self) -> &str {
        match self {
            Directive::WithinHours { text, .. } | Directive::Setting { text, .. } => text,
        }
    }
}

const TIME: &str = r"\d{1,2}(?::\d{2})?\s*(?:[ap]\.?m\.?)?";

static HOURS: LazyLock<Regex> = LazyLock::new(|| {
    Regex::new(&format!(
        r"(?i)\b(?:never|don't|do not|no|not)\s+(?:(?:schedule|book|plan|put)\s+)?(?P<what>[\w' ]+?)\s+(?P<rel>before|after)\s+(?P<t>{TIME})"
    ))
    .unwrap()
});

static SETTING: LazyLock<Regex> = LazyLock::new(|| {
    Regex::new(
        r"(?i)\b(?:set|keep|make|hold)\s+(?:the\s+)?(?P<zone>[a-z][a-z ]*?)\s+(?:at|to)\s+(?P<v>\d+(?:\.\d+)?)\s*(?:°\s*f?|degrees(?:\s+fahrenheit)?|f\b)",
    )
    .unwrap()
});

const FILLER: &[&str] = &[
    "a",
    "an",
    "any",
    "anyone",
    "anything",
    "activities",
    "activity",
    "event",
    "events",
    "for",
    "me",
    "of",
    "on",
    "something",
    "task",
    "tasks",
    "the",
    "thing",
    "things",
    "to",
    "us",
    "with",
];

const WHOLE_HOME: &[&str] = &[
    "house",
    "home",
    "thermostat",
    "temperature",
    "everything",
    "all zones",
    "all rooms",
    "whole house",
    "whole home",
];

fn singular(word: &str) -> String {
    let w = word.to_lowercase();
    for suffix in ["sses", "shes", "ches", "xes"] {
        if w.ends_with(suffix) {
            return w[..w.len() - 2].to_string();
        }
    }
    if let Some(stem) = w.strip_suffix("ies") {
        return format!("{stem}y");
    }
    if w.len() > 3 && w.ends_with('s') && !w.ends_with("ss") {
        return w[..w.len() - 1].to_string();
    }
    w
}

fn minute(text: &str) -> Option<Minute> {
    let t = text.trim().replace('.', "");
    parse_clock(&t).or_else(|| t.parse::<Minute>().ok().filter(|h| *h < 24).map(|h| h * 60))
}

/// Extracts the checkable directives from free-text feedback. Text that
/// states no recognisable constraint yields nothing.
pub fn parse_feedback(text: &str, first_names: &BTreeMap<UserId, String>) -> Vec<Directive> {
    let mut out = Vec::new();
    for cap in HOURS.captures_iter(text) {
        let Some(at) = minute(&cap["t"]) else { continue };
        let mut user = None;
        let mut filter = Vec::new();
        for word in cap["what"].split_whitespace() {
            let word = word.trim_end_matches("'s").trim_end_matches('\'');
            if let Some((id, _)) = first_names.iter().find(|(_, n)| n.eq_ignore_ascii_case(word)) {
                user = Some(id.clone());
            } else if !FILLER.contains(&word.to_lowercase().as_str()) {
                filter.push(singular(word));
            }
        }
        let before = cap["rel"].eq_ignore_ascii_case("before");
        out.push(Directive::WithinHours {
            user,
            filter,
            not_before: before.then_some(at),
            not_after: (!before).then_some(at),
            text: cap[0].trim().to_string(),
        });
    }
    for cap in SETTING.captures_iter(text) {
        let Ok(value) = cap["v"].parse::<f64>() else { continue };
        let mut zone = cap["zone"].trim().to_lowercase();
        for prefix in ["temperature in the ", "temperature in "] {
            if let Some(rest) = zone.strip_prefix(prefix) {
                zone = rest.to_string();
            }
        }
        let zone = (!WHOLE_HOME.contains(&zone.as_str())).then_some(zone);
        out.push(Directive::Setting { zone, attribute: "temperature".into(), value, text: cap[0].trim().to_string() });
    }
    out
}
