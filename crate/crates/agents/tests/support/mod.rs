#![allow(dead_code)]

use std::sync::Arc;

use mup_agents::{ingest_scenario, reference_backend, AgentConfig, Condition, Session};
use mup_core::model::Scenario;
use mup_core::scenarios::bundled_scenario;
use mup_docstore::{DocumentStore, HashingEmbedder, StoreParams};

pub fn scenario(name: &str) -> Arc<Scenario> {
    Arc::new(bundled_scenario(name).unwrap())
}

pub fn store(scenario: &Scenario) -> Arc<DocumentStore> {
    Arc::new(ingest_scenario(scenario, StoreParams::default(), Arc::new(HashingEmbedder::default())).unwrap())
}

/// A session whose every agent is answered by the reference responder.
pub fn replay_session(name: &str, condition: Condition) -> Session {
    let s = scenario(name);
    Session::new(s.clone(), store(&s), reference_backend(s), condition, AgentConfig::default()).unwrap()
}
