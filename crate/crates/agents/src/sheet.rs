use std::collections::BTreeMap;

use mup_llm::ToolSchema;
use schemars::JsonSchema;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, JsonSchema)]
#[serde(tag = "state", rename_all = "snake_case")]
pub enum FieldStatus {
    Filled,
    /// No answer after `attempts` questions.
    Unresolved {
        attempts: u32,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, JsonSchema)]
pub struct SheetField {
    pub status: FieldStatus,
    /// Extracted rule statements, one per line of the retriever's answer.
    #[serde(default)]
    pub entries: Vec<String>,
    /// Chunks the answer was drawn from, e.g. `c4`.
    #[serde(default)]
    pub sources: Vec<String>,
}

impl SheetField {
    pub fn unresolved(attempts: u32) -> Self {
        Self { status: FieldStatus::Unresolved { attempts }, entries: Vec::new(), sources: Vec::new() }
    }

    pub fn is_filled(&self) -> bool {
        self.status == FieldStatus::Filled
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, JsonSchema)]
pub struct UserSection {
    pub schedule: SheetField,
    pub preferences: SheetField,
    pub policies: SheetField,
}

impl UserSection {
    pub fn field(&self, name: &str) -> Option<&SheetField> {
        match name {
            "schedule" => Some(&self.schedule),
            "preferences" => Some(&self.preferences),
            "policies" => Some(&self.policies),
            _ => None,
        }
    }

    pub fn fields(&self) -> [(&'static str, &SheetField); 3] {
        [("schedule", &self.schedule), ("preferences", &self.preferences), ("policies", &self.policies)]
    }
}

/// What the Rule Manager collected, keyed by user first name.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize, JsonSchema)]
#[serde(transparent)]
pub struct RuleSheet(pub BTreeMap<String, UserSection>);

impl RuleSheet {
    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn users(&self) -> impl Iterator<Item = &str> {
        self.0.keys().map(String::as_str)
    }

    pub fn user(&self, first_name: &str) -> Option<&UserSection> {
        self.0.get(first_name)
    }

    /// `(first name, field, attempts)` for every field left unresolved.
    pub fn unresolved(&self) -> Vec<(String, &'static str, u32)> {
        let mut out = Vec::new();
        for (user, section) in &self.0 {
            for (field, f) in section.fields() {
                if let FieldStatus::Unresolved { attempts } = f.status {
                    out.push((user.clone(), field, attempts));
                }
            }
        }
        out
    }

    pub fn to_json(&self) -> serde_json::Value {
        serde_json::to_value(self).expect("rule sheet serializes")
    }
}

/// Schema of the sheet as it travels in the Planner's memory.
pub fn rule_sheet_tool() -> ToolSchema {
    ToolSchema::new(
        "rule_sheet",
        serde_json::to_value(schemars::schema_for!(RuleSheet)).expect("schema serializes"),
        "Rules collected from every user's documents, by first name and field.",
    )
}
