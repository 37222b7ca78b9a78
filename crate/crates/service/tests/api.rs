//! The HTTP API against the reference-replay backend.

mod support;

use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Arc;
use std::time::{Duration, Instant};

use axum::http::StatusCode;
use mup_agents::PlannerOutput;
use mup_core::model::Weekday;
use mup_core::scenarios::bundled_scenario;
use serde_json::{json, Value};
use support::*;

#[tokio::test]
async fn healthz_is_ok() {
    let dir = tempfile::tempdir().unwrap();
    let app = app(&reference_state(dir.path()));
    assert_eq!(call(&app, "GET", "/healthz", None).await.0, StatusCode::OK);
}

#[tokio::test]
async fn caretaking_query_returns_the_reference_monday_plan() {
    let dir = tempfile::tempdir().unwrap();
    let app = app(&reference_state(dir.path()));
    let id = new_session(&app, "assistive-care").await;
    let (status, body) =
        call(&app, "POST", &format!("/api/sessions/{id}/messages"), Some(json!({ "text": CARE_QUERY }))).await;
    assert_eq!(status, StatusCode::OK, "{body}");
    for key in ["plan", "resolutions", "rule_citations", "unresolved_fields"] {
        assert!(body.get(key).is_some(), "missing {key}");
    }
    let out: PlannerOutput = serde_json::from_value(body).unwrap();
    let reference = bundled_scenario("assistive_care").unwrap().reference.plans;
    assert_eq!(out.plans.keys().copied().collect::<Vec<_>>(), [Weekday::Mon]);
    assert_eq!(out.plans[&Weekday::Mon], reference[&Weekday::Mon]);

    let (status, plan) = call(&app, "GET", &format!("/api/sessions/{id}/plan"), None).await;
    assert_eq!(status, StatusCode::OK);
    assert_eq!(serde_json::from_value::<PlannerOutput>(plan).unwrap(), out);
    let (_, sheet) = call(&app, "GET", &format!("/api/sessions/{id}/rulesheet"), None).await;
    assert_eq!(sheet.as_object().unwrap().len(), 3);
}

#[tokio::test]
async fn a_new_session_has_an_empty_sheet_and_plan() {
    let dir = tempfile::tempdir().unwrap();
    let app = app(&reference_state(dir.path()));
    let id = new_session(&app, "workplace").await;
    let (status, sheet) = call(&app, "GET", &format!("/api/sessions/{id}/rulesheet"), None).await;
    assert_eq!((status, sheet), (StatusCode::OK, json!({})));
    let (status, plan) = call(&app, "GET", &format!("/api/sessions/{id}/plan"), None).await;
    assert_eq!(status, StatusCode::OK);
    assert_eq!(serde_json::from_value::<PlannerOutput>(plan).unwrap(), PlannerOutput::default());
    let (_, info) = call(&app, "GET", &format!("/api/sessions/{id}"), None).await;
    assert_eq!((info["scenario"].as_str(), info["turns"].as_u64()), (Some("workplace"), Some(0)));
}

#[tokio::test]
async fn unknown_ids_are_not_found() {
    let dir = tempfile::tempdir().unwrap();
    let app = app(&reference_state(dir.path()));
    let (status, body) = call(&app, "POST", "/api/sessions/nope/messages", Some(json!({ "text": "hi" }))).await;
    assert_eq!(status, StatusCode::NOT_FOUND);
    assert!(body["error"].as_str().unwrap().contains("nope"));
    for uri in ["/api/sessions/nope/plan", "/api/sessions/nope/rulesheet", "/api/eval/nope"] {
        assert_eq!(call(&app, "GET", uri, None).await.0, StatusCode::NOT_FOUND, "{uri}");
    }
    for name in ["atlantis", "..%2Fetc"] {
        let (status, _) = call(&app, "POST", &format!("/api/scenarios/{name}/sessions"), None).await;
        assert_eq!(status, StatusCode::NOT_FOUND, "{name}");
    }
}

#[tokio::test]
async fn invalid_requests_are_unprocessable() {
    let dir = tempfile::tempdir().unwrap();
    let app = app(&reference_state(dir.path()));
    let id = new_session(&app, "workplace").await;
    let (status, _) = call(&app, "POST", &format!("/api/sessions/{id}/messages"), Some(json!({ "text": "  " }))).await;
    assert_eq!(status, StatusCode::UNPROCESSABLE_ENTITY);
    let (status, body) =
        call(&app, "POST", &format!("/api/sessions/{id}/feedback"), Some(json!({ "text": "no meetings before 10am" })))
            .await;
    assert_eq!(status, StatusCode::UNPROCESSABLE_ENTITY, "{body}");
    let (status, _) = call(&app, "POST", &format!("/api/sessions/{id}/messages"), Some(json!({ "words": "x" }))).await;
    assert_eq!(status, StatusCode::UNPROCESSABLE_ENTITY);
    let (status, _) =
        call(&app, "POST", "/api/scenarios/workplace/sessions", Some(json!({ "condition": "Telepathy" }))).await;
    assert_eq!(status, StatusCode::UNPROCESSABLE_ENTITY);
    let (status, _) = call(&app, "POST", "/api/eval/run", Some(json!({ "trials": 0 }))).await;
    assert_eq!(status, StatusCode::UNPROCESSABLE_ENTITY);
}

#[tokio::test]
async fn feedback_revises_the_plan() {
    let dir = tempfile::tempdir().unwrap();
    let app = app(&reference_state(dir.path()));
    let id = new_session(&app, "workplace").await;
    call(&app, "POST", &format!("/api/sessions/{id}/messages"), Some(json!({ "text": "Plan Monday" }))).await;
    let (status, body) = call(
        &app,
        "POST",
        &format!("/api/sessions/{id}/feedback"),
        Some(json!({ "text": "Never schedule anything before 10:00" })),
    )
    .await;
    assert_eq!(status, StatusCode::OK, "{body}");
    let out: PlannerOutput = serde_json::from_value(body).unwrap();
    assert!(out.plans[&Weekday::Mon].actions.iter().all(|a| a.start >= 600));
    assert!(out.feedback_violations.is_empty());
}

#[tokio::test(flavor = "multi_thread", worker_threads = 4)]
async fn a_second_concurrent_message_is_refused() {
    let dir = tempfile::tempdir().unwrap();
    let calls = Arc::new(AtomicUsize::new(0));
    let app = app(&state_with(dir.path(), probing(Duration::from_millis(40), calls)));
    let id = new_session(&app, "workplace").await;
    let uri = format!("/api/sessions/{id}/messages");
    let first = {
        let (app, uri) = (app.clone(), uri.clone());
        tokio::spawn(async move { call(&app, "POST", &uri, Some(json!({ "text": "Plan Monday" }))).await })
    };
    tokio::time::sleep(Duration::from_millis(100)).await;
    let (status, body) = call(&app, "POST", &uri, Some(json!({ "text": "Plan Tuesday" }))).await;
    assert_eq!(status, StatusCode::CONFLICT, "{body}");
    let (status, _) = call(&app, "GET", &format!("/api/sessions/{id}/rulesheet"), None).await;
    assert_eq!(status, StatusCode::OK, "reads do not wait for the turn");
    assert_eq!(first.await.unwrap().0, StatusCode::OK);
    let (status, _) = call(&app, "POST", &uri, Some(json!({ "text": "Plan Tuesday" }))).await;
    assert_eq!(status, StatusCode::OK);
}

#[tokio::test(flavor = "multi_thread", worker_threads = 4)]
async fn distinct_sessions_run_concurrently() {
    let dir = tempfile::tempdir().unwrap();
    let calls = Arc::new(AtomicUsize::new(0));
    let app = app(&state_with(dir.path(), probing(Duration::from_millis(5), calls)));
    let ids = [new_session(&app, "smarthome").await, new_session(&app, "smarthome").await];
    let started = Instant::now();
    let runs = ids.map(|id| {
        let app = app.clone();
        tokio::spawn(async move {
            call(&app, "POST", &format!("/api/sessions/{id}/messages"), Some(json!({ "text": "Plan Wednesday" }))).await
        })
    });
    let mut plans = Vec::new();
    for run in runs {
        let (status, body) = run.await.unwrap();
        assert_eq!(status, StatusCode::OK);
        plans.push(body["plan"].clone());
    }
    assert_eq!(plans[0], plans[1]);
    assert!(started.elapsed() < Duration::from_secs(30));
}

#[tokio::test]
async fn sessions_survive_a_restart_without_new_completions() {
    let dir = tempfile::tempdir().unwrap();
    let calls = Arc::new(AtomicUsize::new(0));
    let (id, plan, sheet, trace) = {
        let state = state_with(dir.path(), probing(Duration::ZERO, calls.clone()));
        let app = app(&state);
        let id = new_session(&app, "workplace").await;
        call(&app, "POST", &format!("/api/sessions/{id}/messages"), Some(json!({ "text": "Plan Friday" }))).await;
        let (status, _) = call(
            &app,
            "POST",
            &format!("/api/sessions/{id}/feedback"),
            Some(json!({ "text": "No meetings after 16:00" })),
        )
        .await;
        assert_eq!(status, StatusCode::OK);
        let plan = call(&app, "GET", &format!("/api/sessions/{id}/plan"), None).await.1;
        let sheet = call(&app, "GET", &format!("/api/sessions/{id}/rulesheet"), None).await.1;
        let trace = call(&app, "GET", &format!("/api/sessions/{id}/trace"), None).await.1;
        (id, plan, sheet, trace)
    };
    let before = calls.load(Ordering::SeqCst);
    assert!(before > 0);

    let state = tokio::task::spawn_blocking({
        let (dir, calls) = (dir.path().to_path_buf(), calls.clone());
        move || state_with(&dir, probing(Duration::ZERO, calls))
    })
    .await
    .unwrap();
    let app = app(&state);
    assert_eq!(calls.load(Ordering::SeqCst), before, "replay is served from the recording");
    assert_eq!(call(&app, "GET", &format!("/api/sessions/{id}/plan"), None).await.1, plan);
    assert_eq!(call(&app, "GET", &format!("/api/sessions/{id}/rulesheet"), None).await.1, sheet);
    assert_eq!(call(&app, "GET", &format!("/api/sessions/{id}/trace"), None).await.1, trace);
    let (_, info) = call(&app, "GET", &format!("/api/sessions/{id}"), None).await;
    assert_eq!(info["turns"], 2);

    let (status, _) =
        call(&app, "POST", &format!("/api/sessions/{id}/messages"), Some(json!({ "text": "Plan Monday" }))).await;
    assert_eq!(status, StatusCode::OK);
    assert!(calls.load(Ordering::SeqCst) > before);
}

#[tokio::test]
async fn recordings_load_as_replay_backends() {
    let dir = tempfile::tempdir().unwrap();
    let app = app(&reference_state(dir.path()));
    let id = new_session(&app, "smarthome").await;
    call(&app, "POST", &format!("/api/sessions/{id}/messages"), Some(json!({ "text": "Plan Tuesday" }))).await;
    let recording = dir.path().join("sessions").join(format!("{id}.turns.jsonl"));
    let turns = std::fs::read_to_string(&recording).unwrap();
    assert!(turns.lines().count() > 1);
    mup_llm::ReplayBackend::load(&recording).unwrap();
    let journal = std::fs::read_to_string(dir.path().join("sessions").join(format!("{id}.jsonl"))).unwrap();
    let events: Vec<Value> = journal.lines().map(|l| serde_json::from_str(l).unwrap()).collect();
    assert_eq!(events[0]["event"], "created");
    assert_eq!(events[1], json!({ "event": "message", "text": "Plan Tuesday" }));
}

#[tokio::test]
async fn the_store_is_ingested_once_per_scenario() {
    let dir = tempfile::tempdir().unwrap();
    let app = app(&reference_state(dir.path()));
    new_session(&app, "workplace").await;
    let snapshot = dir.path().join("stores").join("workplace.json");
    let modified = std::fs::metadata(&snapshot).unwrap().modified().unwrap();
    new_session(&app, "workplace").await;
    assert_eq!(std::fs::metadata(&snapshot).unwrap().modified().unwrap(), modified);
    let (_, sessions) = call(&app, "GET", "/api/sessions", None).await;
    assert_eq!(sessions.as_array().unwrap().len(), 2);
}

#[tokio::test]
async fn eval_jobs_run_in_the_background() {
    let dir = tempfile::tempdir().unwrap();
    let app = app(&reference_state(dir.path()));
    let (status, body) =
        call(&app, "POST", "/api/eval/run", Some(json!({ "scenarios": ["workplace"], "trials": 1 }))).await;
    assert_eq!(status, StatusCode::ACCEPTED);
    let job = body["job_id"].as_str().unwrap().to_string();
    let deadline = Instant::now() + Duration::from_secs(30);
    let report = loop {
        let (status, body) = call(&app, "GET", &format!("/api/eval/{job}"), None).await;
        assert_eq!(status, StatusCode::OK);
        match body["status"].as_str().unwrap() {
            "running" => {}
            "done" => break body["report"].clone(),
            other => panic!("job {other}: {body}"),
        }
        assert!(Instant::now() < deadline, "eval job did not finish");
        tokio::time::sleep(Duration::from_millis(20)).await;
    };
    assert_eq!(report["instances"], 10);
    assert_eq!(report["cells"].as_array().unwrap().len(), 2);
}

#[tokio::test]
async fn scenarios_are_listed() {
    let dir = tempfile::tempdir().unwrap();
    let app = app(&reference_state(dir.path()));
    let (_, body) = call(&app, "GET", "/api/scenarios", None).await;
    let slugs: Vec<&str> = body.as_array().unwrap().iter().map(|s| s["slug"].as_str().unwrap()).collect();
    assert_eq!(slugs, ["workplace", "assistive_care", "smarthome"]);
}
