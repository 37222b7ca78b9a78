use std::collections::HashMap;

use mup_agents::Condition;
use mup_core::conflict::validate_plan;
use mup_core::model::{PlanSet, Weekday};
use mup_core::scenarios::bundled_scenario;
use mup_eval::*;
use mup_llm::BackendConfig;

fn config(trials: u32) -> EvalConfig {
    EvalConfig { trials, ..EvalConfig::default() }
}

#[test]
fn full_scripted_run_has_twelve_cells() {
    let report = run_eval(&config(3)).unwrap();
    assert_eq!(report.cells.len(), 6);
    assert_eq!(report.rows().len(), 12);
    assert_eq!(report.instances, 90);
    assert_eq!(report.scenarios(), ["workplace", "assistive_care", "smarthome"]);
    for scenario in report.scenarios() {
        let multi = report.cell(scenario, Condition::MultiAgent).unwrap();
        let mono = report.cell(scenario, Condition::Monolithic).unwrap();
        assert_eq!((multi.retrieval_pct, multi.conflict_pct), (100.0, 100.0), "{scenario}");
        assert!(mono.retrieval_pct < multi.retrieval_pct, "{scenario}");
        assert!(mono.conflict_pct < multi.conflict_pct, "{scenario}");
        for c in [multi, mono] {
            assert_eq!(c.instances, 15);
            assert_eq!(c.trials.len(), 3);
            assert!(c.trials.iter().flat_map(|t| &t.instances).all(|i| i.ok));
            assert!((0.0..=100.0).contains(&c.retrieval_pct) && (0.0..=100.0).contains(&c.conflict_pct));
        }
    }
    let csv = render(&report, ReportFormat::Csv);
    assert_eq!(csv.lines().count(), 13);
    assert!(csv.contains("assistive_care,multi_agent,retrieval_pct,100.00"));
    assert!(render(&report, ReportFormat::Text).contains("total instances: 90"));
}

#[test]
fn zero_trials_is_rejected() {
    assert!(matches!(run_eval(&config(0)), Err(EvalError::NoTrials)));
    let empty = EvalConfig { weekdays: vec![], ..config(1) };
    assert!(matches!(run_eval(&empty), Err(EvalError::Empty("weekdays"))));
}

#[test]
fn one_trial_has_a_breakdown_of_one() {
    let cfg =
        EvalConfig { scenarios: vec!["assistive-care".into()], conditions: vec![Condition::MultiAgent], ..config(1) };
    let report = run_eval(&cfg).unwrap();
    assert_eq!(report.cells.len(), 1);
    let cell = &report.cells[0];
    assert_eq!(cell.trials.len(), 1);
    assert_eq!(cell.trials[0].trial, 1);
    assert_eq!(cell.trials[0].instances.len(), 5);
    assert_eq!((cell.trials[0].satisfied_rules, cell.trials[0].resolved_conflicts), (60, 12));
}

#[test]
fn emitted_reports_are_byte_stable() {
    let cfg = EvalConfig { scenarios: vec!["smarthome".into()], ..config(2) };
    let a = run_eval(&cfg).unwrap();
    let b = run_eval(&cfg).unwrap();
    let (da, db) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    let fa = emit_report(&a, da.path()).unwrap();
    let fb = emit_report(&b, db.path()).unwrap();
    assert_eq!(fa.len(), 2);
    for (x, y) in fa.iter().zip(&fb) {
        assert_eq!(std::fs::read(x).unwrap(), std::fs::read(y).unwrap());
    }
    let back: EvalReport = serde_json::from_slice(&std::fs::read(&fa[0]).unwrap()).unwrap();
    assert_eq!(back, a);
}

#[test]
fn failed_instances_earn_no_credit() {
    let dir = tempfile::tempdir().unwrap();
    let script = dir.path().join("empty.json");
    std::fs::write(&script, serde_json::to_string(&HashMap::<String, String>::new()).unwrap()).unwrap();
    let cfg = EvalConfig {
        scenarios: vec!["workplace".into()],
        conditions: vec![Condition::MultiAgent],
        backend: EvalBackend::Live { config: BackendConfig::Scripted { script } },
        ..config(1)
    };
    let report = run_eval(&cfg).unwrap();
    let trial = &report.cells[0].trials[0];
    assert!(trial
        .instances
        .iter()
        .all(|i| !i.ok && i.error.as_deref().is_some_and(|e| e.contains("no scripted reply"))));
    let s = bundled_scenario("workplace").unwrap();
    let empty = validate_plan(&PlanSet::new(), &s).unwrap();
    assert_eq!(trial.satisfied_rules, empty.satisfied_rule_ids.len());
    assert_eq!(trial.resolved_conflicts, 0);
    assert!(trial.retrieval_pct < 100.0);
}

#[test]
fn unknown_scenario_and_missing_backend_are_errors() {
    let cfg = EvalConfig { scenarios: vec!["moon_base".into()], ..config(1) };
    assert!(matches!(run_eval(&cfg), Err(EvalError::Scenario(_))));
    let cfg = EvalConfig {
        backend: EvalBackend::Live {
            config: BackendConfig::Replay { recording: "/nonexistent/recording.jsonl".into() },
        },
        ..config(1)
    };
    assert!(matches!(run_eval(&cfg), Err(EvalError::Backend(_))));
}

#[test]
fn config_round_trips_with_defaults() {
    let cfg: EvalConfig = serde_json::from_str(r#"{"trials": 2, "weekdays": ["Mon", "Tue"]}"#).unwrap();
    assert_eq!(cfg.trials, 2);
    assert_eq!(cfg.weekdays, [Weekday::Mon, Weekday::Tue]);
    assert_eq!(cfg.conditions, Condition::ALL);
    assert_eq!(cfg.backend, EvalBackend::default());
    let back: EvalConfig = serde_json::from_str(&serde_json::to_string(&cfg).unwrap()).unwrap();
    assert_eq!(back, cfg);
}

#[test]
fn queries_name_the_day() {
    let s = bundled_scenario("assistive_care").unwrap();
    assert_eq!(day_query(&s, Weekday::Mon), "Provide me with your caretaking tasks for Monday");
    let w = bundled_scenario("workplace").unwrap();
    assert!(day_query(&w, Weekday::Thu).contains("Thursday"));
}
