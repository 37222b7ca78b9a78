use std::sync::Arc;

use mup_agents::{ingest_scenario, reference_backend, AgentConfig, Condition, Session, TruncatingBackend};
use mup_core::conflict::validate_plan;
use mup_core::model::{PlanSet, PolicyVariant, Scenario, Weekday};
use mup_core::scenarios::{bundled, bundled_scenario, load_scenario};
use mup_docstore::{DocumentStore, HashingEmbedder, StoreParams};
use mup_llm::{build_backend, ChatBackend};

use crate::config::{EvalBackend, EvalConfig, EvalError};
use crate::report::{Cell, EvalReport, InstanceResult, TrialResult};

/// The per-day planning request put to the planner.
pub fn day_query(scenario: &Scenario, day: Weekday) -> String {
    let day = day.full_name();
    match scenario.policy.variant {
        PolicyVariant::ActivityPriority { .. } => format!("What is the meeting schedule for {day}?"),
        PolicyVariant::AlphabeticalFirstName => format!("Provide me with your caretaking tasks for {day}"),
        PolicyVariant::EscalateToDiscussion => format!("What are the temperature settings for {day}?"),
    }
}

/// Loads scenarios by bundled name or file path; `all` expands to every
/// bundled scenario.
pub fn resolve_scenarios(names: &[String]) -> Result<Vec<Scenario>, EvalError> {
    let mut out: Vec<Scenario> = Vec::new();
    for name in names {
        let found = if name.eq_ignore_ascii_case("all") {
            bundled()
        } else if name.ends_with(".json") {
            vec![load_scenario(name)?]
        } else {
            vec![bundled_scenario(name)?]
        };
        for s in found {
            if !out.iter().any(|o| o.slug == s.slug) {
                out.push(s);
            }
        }
    }
    Ok(out)
}

fn pct(part: usize, whole: usize) -> f64 {
    if whole == 0 {
        100.0
    } else {
        part as f64 * 100.0 / whole as f64
    }
}

/// One fresh session asked for each weekday in turn. The day plans are
/// merged and validated together; a failed request leaves its day empty.
pub fn run_trial(
    scenario: Arc<Scenario>,
    store: Arc<DocumentStore>,
    backend: Arc<dyn ChatBackend>,
    condition: Condition,
    weekdays: &[Weekday],
    agents: &AgentConfig,
    trial: u32,
) -> Result<TrialResult, EvalError> {
    let mut instances = Vec::with_capacity(weekdays.len());
    let mut merged = PlanSet::new();
    match Session::new(scenario.clone(), store, backend, condition, agents.clone()) {
        Ok(mut session) => {
            for day in weekdays {
                match session.planner_respond(&day_query(&scenario, *day)) {
                    Ok(out) => {
                        let plan = out.plans.get(day).cloned();
                        instances.push(InstanceResult {
                            day: *day,
                            ok: plan.is_some(),
                            actions: plan.as_ref().map_or(0, |p| p.actions.len()),
                            error: plan.is_none().then(|| format!("no plan for {day}")),
                        });
                        if let Some(plan) = plan {
                            merged.insert(*day, plan);
                        }
                    }
                    Err(e) => {
                        instances.push(InstanceResult { day: *day, ok: false, actions: 0, error: Some(e.to_string()) })
                    }
                }
            }
        }
        Err(e) => {
            for day in weekdays {
                instances.push(InstanceResult { day: *day, ok: false, actions: 0, error: Some(e.to_string()) });
            }
        }
    }
    let report = validate_plan(&merged, &scenario)?;
    let total_rules = scenario.rules.len();
    Ok(TrialResult {
        trial,
        retrieval_pct: pct(report.satisfied_rule_ids.len(), total_rules),
        conflict_pct: pct(report.resolved_conflict_ids.len(), report.conflicts_checked),
        satisfied_rules: report.satisfied_rule_ids.len(),
        total_rules,
        resolved_conflicts: report.resolved_conflict_ids.len(),
        total_conflicts: report.conflicts_checked,
        instances,
    })
}

/// Runs every (scenario, condition) cell for the configured trials. Trials
/// of a cell run concurrently; the report is assembled in a fixed order.
pub fn run_eval(config: &EvalConfig) -> Result<EvalReport, EvalError> {
    config.validate()?;
    let scenarios = resolve_scenarios(&config.scenarios)?;
    let live = match &config.backend {
        EvalBackend::Live { config } => Some(build_backend(config)?),
        EvalBackend::Reference { .. } => None,
    };
    let mut cells = Vec::new();
    for scenario in scenarios {
        let scenario = Arc::new(scenario);
        let store = Arc::new(
            ingest_scenario(&scenario, StoreParams::default(), Arc::new(HashingEmbedder::default()))
                .map_err(|source| EvalError::Store { scenario: scenario.slug.clone(), source })?,
        );
        for &condition in &config.conditions {
            let backend: Arc<dyn ChatBackend> = match (&live, &config.backend) {
                (Some(b), _) => b.clone(),
                (None, EvalBackend::Reference { truncate_monolithic, keep }) => {
                    let replay = reference_backend(scenario.clone());
                    if *truncate_monolithic && condition == Condition::Monolithic {
                        Arc::new(TruncatingBackend::new(replay, *keep))
                    } else {
                        replay
                    }
                }
                (None, EvalBackend::Live { .. }) => unreachable!("live backends are built up front"),
            };
            let trials: Vec<Result<TrialResult, EvalError>> = std::thread::scope(|scope| {
                let handles: Vec<_> = (1..=config.trials)
                    .map(|trial| {
                        let (scenario, store, backend) = (scenario.clone(), store.clone(), backend.clone());
                        scope.spawn(move || {
                            run_trial(scenario, store, backend, condition, &config.weekdays, &config.agents, trial)
                        })
                    })
                    .collect();
                handles.into_iter().map(|h| h.join().expect("trial thread panicked")).collect()
            });
            let trials = trials.into_iter().collect::<Result<Vec<_>, _>>()?;
            cells.push(Cell::from_trials(&scenario.slug, condition, trials));
        }
    }
    Ok(EvalReport::new(config.trials, config.weekdays.clone(), cells))
}
