//! Prompt templates, shipped as text assets under `prompts/`.

use mup_core::model::{PolicyVariant, Scenario};

pub const RETRIEVER: &str = include_str!("../prompts/retriever.txt");
pub const PLANNER_WORKPLACE: &str = include_str!("../prompts/planner_workplace.txt");
pub const PLANNER_ASSISTIVE_CARE: &str = include_str!("../prompts/planner_assistive_care.txt");
pub const PLANNER_SMARTHOME: &str = include_str!("../prompts/planner_smarthome.txt");
pub const PLANNER_OUTPUT: &str = include_str!("../prompts/planner_output.txt");
pub const MONOLITHIC: &str = include_str!("../prompts/monolithic.txt");

/// First line of every retriever system prompt; scripted responders key on it.
pub const RETRIEVER_MARKER: &str = "ROLE: rule retriever";
pub const PLANNER_MARKER: &str = "ROLE: planner";
pub const DOCUMENTS_BEGIN: &str = "=== USER DOCUMENTS ===";
pub const DOCUMENTS_END: &str = "=== END USER DOCUMENTS ===";

/// "A", "A and B", "A, B and C".
pub fn join_names(names: &[&str]) -> String {
    match names {
        [] => String::new(),
        [one] => one.to_string(),
        [init @ .., last] => format!("{} and {last}", init.join(", ")),
    }
}

/// The planner's system prompt for a scenario. The template is chosen by the
/// scenario's resolution policy.
pub fn planner_system_prompt(scenario: &Scenario) -> String {
    let template = match scenario.policy.variant {
        PolicyVariant::ActivityPriority { .. } => PLANNER_WORKPLACE,
        PolicyVariant::AlphabeticalFirstName => PLANNER_ASSISTIVE_CARE,
        PolicyVariant::EscalateToDiscussion => PLANNER_SMARTHOME,
    };
    let names: Vec<&str> = scenario.users.iter().map(|u| u.first_name.as_str()).collect();
    let mut prompt = template.replace("{scenario_name}", &scenario.name).replace("{users}", &join_names(&names));
    prompt.push_str(PLANNER_OUTPUT);
    prompt
}

/// The planner prompt with every user document inlined, for the
/// single-agent condition.
pub fn monolithic_system_prompt(scenario: &Scenario) -> String {
    let docs: Vec<&str> =
        scenario.users.iter().filter_map(|u| scenario.documents.get(&u.user_id)).map(|d| d.trim_end()).collect();
    let mut prompt = planner_system_prompt(scenario);
    prompt.push_str(&MONOLITHIC.replace("{documents}", &docs.join("\n\n")));
    prompt
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn names_are_joined_naturally() {
        assert_eq!(join_names(&["Ann"]), "Ann");
        assert_eq!(join_names(&["Ann", "Bo"]), "Ann and Bo");
        assert_eq!(join_names(&["Ann", "Bo", "Cy"]), "Ann, Bo and Cy");
    }

    #[test]
    fn templates_are_filled() {
        for s in mup_core::scenarios::bundled() {
            let p = planner_system_prompt(&s);
            assert!(p.starts_with(PLANNER_MARKER));
            assert!(p.contains(&s.name));
            assert!(!p.contains("{users}") && !p.contains("{scenario_name}"));
            for u in &s.users {
                assert!(p.contains(&u.first_name), "{}", u.first_name);
            }
            let m = monolithic_system_prompt(&s);
            assert!(m.contains(DOCUMENTS_BEGIN) && m.contains(DOCUMENTS_END));
            assert!(!m.contains("{documents}"));
        }
        assert!(RETRIEVER.starts_with(RETRIEVER_MARKER));
    }
}
