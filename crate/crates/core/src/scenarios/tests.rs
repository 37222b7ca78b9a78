use super::*;

#[test]
fn lookup_accepts_names_and_slugs() {
    for name in ["workplace", "Workplace Scheduling", "assistive-care", "SMARTHOME", "smart home"] {
        assert!(bundled_scenario(name).is_ok(), "{name}");
    }
    assert!(matches!(bundled_scenario("office"), Err(ScenarioError::Unknown(_))));
}

#[test]
fn parse_errors_carry_path_and_line() {
    let mut v: serde_json::Value = serde_json::from_str(WORKPLACE).unwrap();
    v["rules"][2]["text"] = serde_json::json!(9);
    let text = serde_json::to_string_pretty(&v).unwrap();
    match parse_scenario(&text) {
        Err(ScenarioError::Parse { path, line, .. }) => {
            assert_eq!(path, "rules[2].text");
            assert!(line > 1);
        }
        other => panic!("expected parse error, got {other:?}"),
    }
}

#[test]
fn user_without_rules_gets_header_only() {
    let mut s = bundled_scenario("workplace").unwrap();
    let dana = s.users[0].user_id.clone();
    s.rules.retain(|r| r.owner != dana);
    s.users[0].rules.clear();
    let docs = render_documents(&s);
    assert_eq!(docs[&dana], "Dana's rules\n");
}
