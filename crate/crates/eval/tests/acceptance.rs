//! The acceptance gate: every primary criterion, one PASS/FAIL line each.
//! Runs without the libtest harness so the lines are always printed.

#[path = "../../llm/tests/support/adversary.rs"]
mod adversary;
#[path = "../../docstore/tests/support/corpus.rs"]
mod corpus;
#[path = "../../agents/tests/support/flaky.rs"]
mod flaky;
#[path = "../../core/tests/support/oracle.rs"]
mod oracle;

use std::collections::BTreeSet;
use std::sync::Arc;
use std::time::{Duration, Instant};

use mup_agents::{Condition, FieldStatus, RuleManagerTask, FIELDS};
use mup_core::conflict::{detect_conflicts, validate_plan};
use mup_core::model::{Conflict, Weekday};
use mup_core::scenarios::bundled;
use mup_docstore::{DocumentStore, Embedder, HashingEmbedder, StoreParams};
use mup_eval::{run_eval, EvalConfig, EvalReport, ReportFormat};
use mup_llm::orchestrator::{run_task, Agent, AgentSpec, LlmTask, TaskErrorKind};
use mup_llm::{FnBackend, Message, Trace};
use proptest::prelude::*;
use proptest::test_runner::{Config, TestRunner};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Verdict = Result<String, String>;
type Check<'a> = Box<dyn Fn() -> Verdict + 'a>;

fn ensure(ok: bool, msg: impl Into<String>) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(msg.into())
    }
}

fn full_config(conditions: Vec<Condition>) -> EvalConfig {
    EvalConfig { conditions, ..EvalConfig::default() }
}

fn scripted_replay() -> Verdict {
    let cfg = full_config(vec![Condition::MultiAgent]);
    let started = Instant::now();
    let first = run_eval(&cfg).map_err(|e| e.to_string())?;
    let elapsed = started.elapsed();
    let second = run_eval(&cfg).map_err(|e| e.to_string())?;
    ensure(first.instances == 45, format!("{} instances, expected 45", first.instances))?;
    for cell in &first.cells {
        for t in &cell.trials {
            ensure(
                (t.satisfied_rules, t.total_rules, t.resolved_conflicts, t.total_conflicts) == (60, 60, 12, 12),
                format!(
                    "{} trial {}: {}/{} rules, {}/{} conflicts",
                    cell.scenario, t.trial, t.satisfied_rules, t.total_rules, t.resolved_conflicts, t.total_conflicts
                ),
            )?;
        }
    }
    ensure(elapsed < Duration::from_secs(60), format!("run took {elapsed:?}"))?;
    let (a, b) = (mup_eval::render(&first, ReportFormat::Json), mup_eval::render(&second, ReportFormat::Json));
    ensure(a == b, "reports differ between runs")?;
    Ok(format!("60/60 and 12/12 in every trial of 3 scenarios; 45 instances in {elapsed:.2?}; reports identical"))
}

fn scenario_anchoring() -> Verdict {
    for s in bundled() {
        let detected = detect_conflicts(&s.rules, &s.horizon);
        let reference: Vec<Conflict> = s.reference.conflicts.iter().map(|c| c.conflict.clone()).collect();
        ensure(detected.len() == 12, format!("{}: {} conflicts detected", s.slug, detected.len()))?;
        let (d, r): (BTreeSet<String>, BTreeSet<String>) = (
            detected.iter().map(|c| serde_json::to_string(c).unwrap()).collect(),
            reference.iter().map(|c| serde_json::to_string(c).unwrap()).collect(),
        );
        ensure(d == r, format!("{}: detected conflicts differ from the reference", s.slug))?;
        let report = validate_plan(&s.reference.plans, &s).map_err(|e| e.to_string())?;
        ensure(
            report.violations.is_empty(),
            format!("{}: reference plan has {} violations", s.slug, report.violations.len()),
        )?;
    }
    Ok("3 scenarios: exactly the 12 reference conflicts, reference plans have 0 violations".into())
}

fn conflict_oracle() -> Verdict {
    let mut runner = TestRunner::new(Config { cases: 500, failure_persistence: None, ..Config::default() });
    let strategy = (oracle::arb_rules(5, 40), any::<u64>());
    runner
        .run(&strategy, |(rules, seed)| {
            let detected = detect_conflicts(&rules, &oracle::DAYS);
            prop_assert_eq!(oracle::as_expected(&detected), oracle::brute_force(&rules, &oracle::DAYS));
            let mut shuffled = rules.clone();
            shuffled.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
            prop_assert_eq!(detect_conflicts(&shuffled, &oracle::DAYS), detected);
            Ok(())
        })
        .map_err(|e| e.to_string())?;
    Ok("500 random rule sets (<=40 rules, <=5 users) equal the brute force; permutation invariant".into())
}

fn store_from_seed(seed: u64, max_docs: usize) -> (DocumentStore, Vec<String>, ChaCha8Rng) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = rng.random_range(1..=max_docs);
    let docs = corpus::random_corpus(&mut rng, n);
    let texts = docs.iter().map(|(_, t)| t.clone()).collect();
    let store = DocumentStore::ingest(docs, StoreParams::default(), Arc::new(HashingEmbedder::default())).unwrap();
    (store, texts, rng)
}

fn retrieval_oracle() -> Verdict {
    let embedder = HashingEmbedder::default();
    for seed in 0..200u64 {
        let (store, texts, mut rng) = store_from_seed(seed, 200);
        ensure(store.len() <= 200, format!("seed {seed}: {} chunks", store.len()))?;
        let query = &texts[rng.random_range(0..texts.len())];
        let k = rng.random_range(1..=10);
        let qv = embedder.embed(query).map_err(|e| e.to_string())?;
        let vectors: Vec<Vec<f64>> = store.chunks().iter().map(|c| c.embedding.clone()).collect();
        let mut want = corpus::brute_force_cosine(&qv, &vectors);
        want.truncate(k);
        let got: Vec<(usize, f64)> = store
            .semantic_search(query, k)
            .map_err(|e| e.to_string())?
            .iter()
            .map(|r| (r.chunk_id.0 as usize, r.semantic_score))
            .collect();
        corpus::same_ranking(&got, &want).map_err(|e| format!("seed {seed}: {e}"))?;
    }
    let mut hits = 0;
    for seed in 0..200u64 {
        let (store, texts, mut rng) = store_from_seed(10_000 + seed, 200);
        let planted = rng.random_range(0..texts.len());
        let top = store.hybrid_retrieve(&texts[planted], 5).map_err(|e| e.to_string())?;
        if top.first().is_some_and(|r| r.chunk_id.0 as usize == planted) {
            hits += 1;
        }
    }
    ensure(hits >= 190, format!("planted chunk first in {hits}/200 trials"))?;
    Ok(format!("200 corpora match exact cosine; planted chunk first in {hits}/200"))
}

fn rule_manager() -> Verdict {
    let users: Vec<String> = flaky::USERS.iter().map(|u| u.to_string()).collect();
    let expected_calls = users.len() * FIELDS.len() * 3;

    let mut twice = flaky::FlakyRetriever::new(2);
    let mut m = RuleManagerTask::new(&mut twice, users.clone(), 3);
    run_task(&Trace::new(), &mut m, Message::user("collect")).map_err(|e| e.to_string())?;
    ensure(m.calls() == expected_calls, format!("{} calls with twice-failing retriever", m.calls()))?;
    let sheet = m.into_sheet().ok_or("no sheet")?;
    ensure(
        sheet.0.values().all(|s| s.fields().iter().all(|(_, f)| f.status == FieldStatus::Filled)),
        "a field is not Filled",
    )?;

    let mut never = flaky::FlakyRetriever::failing(&FIELDS);
    let mut m = RuleManagerTask::new(&mut never, users.clone(), 3);
    let reply = run_task(&Trace::new(), &mut m, Message::user("collect")).map_err(|e| e.to_string())?;
    ensure(m.calls() == expected_calls, format!("{} calls with always-failing retriever", m.calls()))?;
    let sheet = m.into_sheet().ok_or("no sheet")?;
    ensure(
        sheet.0.values().all(|s| s.fields().iter().all(|(_, f)| f.status == FieldStatus::Unresolved { attempts: 3 })),
        "a field is not Unresolved(3)",
    )?;
    ensure(
        serde_json::from_str::<serde_json::Value>(&reply.content).ok() == Some(sheet.to_json()),
        "sheet was not emitted",
    )?;
    Ok(format!(
        "{expected_calls} calls: all Filled when failing twice, all Unresolved(3) when always failing, sheet emitted"
    ))
}

fn orchestrator_bounds() -> Verdict {
    let mut slowest = Duration::ZERO;
    let mut runs = 0;
    for seed in 0..200u64 {
        for required in [false, true] {
            let started = Instant::now();
            let spec = AgentSpec::new("adversary", "Use tools.", Arc::new(FnBackend(adversary::adversary(seed))))
                .with_tools(vec![adversary::calc_tool()])
                .with_max_turns(1 + (seed % 20) as u32)
                .tool_required(required);
            let mut agent = Agent::new(spec).map_err(|e| e.to_string())?;
            let result = run_task(
                &Trace::new(),
                &mut LlmTask { agent: &mut agent, handler: &mut adversary::Calc },
                Message::user("go"),
            );
            match result {
                Err(e)
                    if matches!(
                        e.kind,
                        TaskErrorKind::MaxTurnsExceeded { .. } | TaskErrorKind::ProtocolDeviation { .. }
                    ) => {}
                other => return Err(format!("seed {seed}: ended with {other:?}")),
            }
            let took = started.elapsed();
            ensure(took < Duration::from_secs(1), format!("seed {seed} took {took:?}"))?;
            slowest = slowest.max(took);
            runs += 1;
        }
    }
    Ok(format!("{runs} adversarial runs ended in MaxTurnsExceeded/ProtocolDeviation; slowest {slowest:.2?}"))
}

fn degradation(report: &EvalReport) -> Verdict {
    let mut parts = Vec::new();
    for scenario in report.scenarios() {
        let multi = report.cell(scenario, Condition::MultiAgent).ok_or("missing multi-agent cell")?;
        let mono = report.cell(scenario, Condition::Monolithic).ok_or("missing monolithic cell")?;
        ensure(
            mono.retrieval_pct < multi.retrieval_pct && mono.conflict_pct < multi.conflict_pct,
            format!(
                "{scenario}: monolithic {:.1}/{:.1} vs multi-agent {:.1}/{:.1}",
                mono.retrieval_pct, mono.conflict_pct, multi.retrieval_pct, multi.conflict_pct
            ),
        )?;
        parts.push(format!("{scenario} {:.1}/{:.1}", mono.retrieval_pct, mono.conflict_pct));
    }
    ensure(parts.len() == 3, "expected 3 scenarios")?;
    Ok(format!("monolithic retrieval/conflict below 100/100: {}", parts.join(", ")))
}

fn accounting(report: &EvalReport) -> Verdict {
    ensure(report.instances == 90, format!("{} instances", report.instances))?;
    ensure(report.scenarios().len() == 3, "not 3 scenarios")?;
    ensure(report.cells.len() == 6, format!("{} cells", report.cells.len()))?;
    ensure(report.rows().len() == 12, format!("{} metric cells", report.rows().len()))?;
    let csv = mup_eval::render(report, ReportFormat::Csv);
    ensure(csv.lines().count() == 13, "csv is not 12 rows plus header")?;
    ensure(report.cells.iter().all(|c| c.instances == 15), "a cell does not have 15 instances")?;
    ensure(report.weekdays == Weekday::WORKWEEK, "weekdays are not Mon-Fri")?;
    Ok("90 instances; 3 scenarios x 2 conditions x 2 metrics = 12 cells".into())
}

fn main() {
    let full = run_eval(&full_config(Condition::ALL.to_vec()));
    let criteria: Vec<(&str, Check)> = vec![
        ("scripted replay end to end", Box::new(scripted_replay)),
        ("scenario anchoring", Box::new(scenario_anchoring)),
        ("conflict oracle", Box::new(conflict_oracle)),
        ("retrieval oracle", Box::new(retrieval_oracle)),
        ("rule manager protocol", Box::new(rule_manager)),
        ("orchestrator bounds", Box::new(orchestrator_bounds)),
        ("degradation", Box::new(|| full.as_ref().map_err(|e| e.to_string()).and_then(degradation))),
        ("accounting", Box::new(|| full.as_ref().map_err(|e| e.to_string()).and_then(accounting))),
    ];
    let mut failed = Vec::new();
    for (i, (name, check)) in criteria.iter().enumerate() {
        let started = Instant::now();
        let verdict = std::panic::catch_unwind(std::panic::AssertUnwindSafe(check))
            .unwrap_or_else(|_| Err("panicked".to_string()));
        match verdict {
            Ok(detail) => println!("PASS [{}] {name}: {detail} ({:.2?})", i + 1, started.elapsed()),
            Err(why) => {
                println!("FAIL [{}] {name}: {why}", i + 1);
                failed.push(*name);
            }
        }
    }
    println!("acceptance: {} passed, {} failed", criteria.len() - failed.len(), failed.len());
    if !failed.is_empty() {
        eprintln!("failed criteria: {failed:?}");
        std::process::exit(1);
    }
}
