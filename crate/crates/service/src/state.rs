use std::collections::HashMap;
use std::path::{Path, PathBuf};
use std::sync::{Arc, Mutex, RwLock};
use std::time::{SystemTime, UNIX_EPOCH};

use mup_agents::{
    ingest_scenario, reference_backend, AgentConfig, Condition, PlannerOutput, RuleSheet, Session, TruncatingBackend,
};
use mup_core::model::Scenario;
use mup_core::scenarios::{bundled_scenario, load_scenario};
use mup_docstore::{chunk_document, DocumentStore, Embedder, HashingEmbedder, RemoteEmbedder, RemoteEmbedderConfig};
use mup_eval::{EvalBackend, EvalConfig, EvalReport};
use mup_llm::{build_backend, ChatBackend, LlmError, TraceEvent};
use serde::Serialize;
use uuid::Uuid;

use crate::journal::{read_lines, Journal, JournalEntry, RecordingBackend};
use crate::ServiceError;

/// Builds the chat backend for a new session.
pub type BackendFactory =
    Arc<dyn Fn(&Arc<Scenario>, Condition) -> Result<Arc<dyn ChatBackend>, LlmError> + Send + Sync>;

/// Session backends for a backend configuration. Remote clients are built
/// once and shared by every session.
pub fn backend_factory(backend: &EvalBackend) -> Result<BackendFactory, LlmError> {
    Ok(match backend.clone() {
        EvalBackend::Reference { truncate_monolithic, keep } => Arc::new(move |scenario, condition| {
            let replay = reference_backend(scenario.clone());
            Ok(if truncate_monolithic && condition == Condition::Monolithic {
                Arc::new(TruncatingBackend::new(replay, keep))
            } else {
                replay
            })
        }),
        EvalBackend::Live { config } => {
            let shared = build_backend(&config)?;
            Arc::new(move |_, _| Ok(shared.clone()))
        }
    })
}

/// Reads a backend configuration from TOML, or JSON when the file ends in
/// `.json`.
pub fn load_backend_config(path: &Path) -> Result<EvalBackend, ServiceError> {
    let text = std::fs::read_to_string(path).map_err(|e| ServiceError::Invalid(format!("{}: {e}", path.display())))?;
    let parsed = if path.extension().is_some_and(|e| e == "json") {
        serde_json::from_str(&text).map_err(|e| e.to_string())
    } else {
        toml::from_str(&text).map_err(|e| e.to_string())
    };
    parsed.map_err(|e| ServiceError::Invalid(format!("{}: {e}", path.display())))
}

/// The remote embedder when `MUP_EMBED_URL` is set, otherwise the local
/// hashing embedder.
pub fn default_embedder() -> Result<Arc<dyn Embedder>, ServiceError> {
    Ok(match RemoteEmbedderConfig::from_env() {
        Some(c) => Arc::new(RemoteEmbedder::new(c).map_err(ServiceError::internal)?),
        None => Arc::new(HashingEmbedder::default()),
    })
}

/// A bundled scenario, or `<data_dir>/scenarios/<name>.json`.
pub fn find_scenario(data_dir: &Path, name: &str) -> Result<Scenario, ServiceError> {
    if name.is_empty() || !name.chars().all(|c| c.is_ascii_alphanumeric() || c == '_' || c == '-') {
        return Err(ServiceError::UnknownScenario(name.into()));
    }
    if let Ok(s) = bundled_scenario(name) {
        return Ok(s);
    }
    let path = data_dir.join("scenarios").join(format!("{name}.json"));
    if !path.exists() {
        return Err(ServiceError::UnknownScenario(name.into()));
    }
    load_scenario(&path).map_err(|e| ServiceError::Invalid(e.to_string()))
}

fn snapshot_path(data_dir: &Path, slug: &str) -> PathBuf {
    data_dir.join("stores").join(format!("{slug}.json"))
}

/// True when the store holds exactly the scenario's documents, chunked with
/// the store's own parameters.
fn store_matches(store: &DocumentStore, scenario: &Scenario) -> bool {
    let params = store.params();
    let mut expected = Vec::new();
    for (user, doc) in &scenario.documents {
        match chunk_document(doc, params.chunk_size, params.overlap) {
            Ok(spans) => expected.extend(spans.into_iter().map(|s| (user.to_string(), s.char_offset, s.text))),
            Err(_) => return false,
        }
    }
    let mut actual: Vec<(String, usize, String)> =
        store.chunks().iter().map(|c| (c.doc_id.clone(), c.char_offset, c.text.clone())).collect();
    expected.sort();
    actual.sort();
    expected == actual
}

/// Ingests the scenario's documents and writes the snapshot under
/// `<data_dir>/stores`.
pub fn ingest_into(
    data_dir: &Path,
    scenario: &Scenario,
    embedder: Arc<dyn Embedder>,
) -> Result<(DocumentStore, PathBuf), ServiceError> {
    let store = ingest_scenario(scenario, Default::default(), embedder).map_err(ServiceError::internal)?;
    let path = snapshot_path(data_dir, &scenario.slug);
    std::fs::create_dir_all(path.parent().unwrap()).map_err(ServiceError::internal)?;
    store.save_snapshot(&path).map_err(ServiceError::internal)?;
    Ok((store, path))
}

/// Loads the snapshot when it is current for this scenario and embedder,
/// otherwise ingests afresh.
fn load_or_ingest(
    data_dir: &Path,
    scenario: &Scenario,
    embedder: &Arc<dyn Embedder>,
) -> Result<DocumentStore, ServiceError> {
    let path = snapshot_path(data_dir, &scenario.slug);
    if path.exists() {
        match DocumentStore::load_snapshot(&path, embedder.clone()) {
            Ok(store) if store_matches(&store, scenario) => return Ok(store),
            Ok(_) => tracing::info!(scenario = %scenario.slug, "snapshot is stale; re-ingesting"),
            Err(e) => tracing::info!(scenario = %scenario.slug, error = %e, "snapshot unusable; re-ingesting"),
        }
    }
    Ok(ingest_into(data_dir, scenario, embedder.clone())?.0)
}

pub struct ServiceConfig {
    pub data_dir: PathBuf,
    pub backends: BackendFactory,
    pub embedder: Arc<dyn Embedder>,
    pub agents: AgentConfig,
}

impl ServiceConfig {
    /// Hashing embedder and default agent settings.
    pub fn new(data_dir: impl Into<PathBuf>, backends: BackendFactory) -> Self {
        Self {
            data_dir: data_dir.into(),
            backends,
            embedder: Arc::new(HashingEmbedder::default()),
            agents: AgentConfig::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SessionInfo {
    pub session_id: String,
    pub scenario: String,
    pub condition: Condition,
    pub created_at: u64,
    /// Messages and feedback handled so far.
    pub turns: usize,
}

/// What GET requests see; refreshed after every handled request so reads
/// never wait for an in-flight turn.
#[derive(Default)]
struct View {
    turns: usize,
    sheet: RuleSheet,
    last: Option<PlannerOutput>,
    trace: Vec<TraceEvent>,
}

pub(crate) struct Live {
    session: Session,
    journal: Journal,
}

pub(crate) struct SessionSlot {
    id: String,
    scenario: String,
    condition: Condition,
    created_at: u64,
    view: Mutex<View>,
    pub(crate) live: Arc<tokio::sync::Mutex<Live>>,
}

impl SessionSlot {
    pub fn info(&self) -> SessionInfo {
        SessionInfo {
            session_id: self.id.clone(),
            scenario: self.scenario.clone(),
            condition: self.condition,
            created_at: self.created_at,
            turns: self.view.lock().unwrap().turns,
        }
    }

    pub fn sheet(&self) -> RuleSheet {
        self.view.lock().unwrap().sheet.clone()
    }

    pub fn last_output(&self) -> Option<PlannerOutput> {
        self.view.lock().unwrap().last.clone()
    }

    pub fn trace(&self) -> Vec<TraceEvent> {
        self.view.lock().unwrap().trace.clone()
    }

    fn refresh(&self, session: &Session) {
        let mut view = self.view.lock().unwrap();
        view.turns += 1;
        view.sheet = session.rule_sheet().cloned().unwrap_or_default();
        view.last = session.last_output().cloned();
        view.trace = session.trace().events();
    }

    /// Journals and handles one user turn. Runs on a blocking thread with
    /// the session lock held.
    pub fn handle(&self, live: &mut Live, entry: JournalEntry) -> Result<PlannerOutput, ServiceError> {
        live.journal.append(&entry).map_err(ServiceError::internal)?;
        let result = apply(&mut live.session, &entry);
        self.refresh(&live.session);
        Ok(result?)
    }
}

fn apply(session: &mut Session, entry: &JournalEntry) -> Result<PlannerOutput, mup_agents::AgentError> {
    match entry {
        JournalEntry::Message { text } => session.planner_respond(text),
        JournalEntry::Feedback { text } => session.planner_feedback(text),
        JournalEntry::Created { .. } => unreachable!("only user turns are applied"),
    }
}

#[derive(Debug, Clone, Serialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum JobStatus {
    Running,
    Done { report: EvalReport },
    Failed { error: String },
}

type Loaded = (Arc<Scenario>, Arc<DocumentStore>);

struct Inner {
    config: ServiceConfig,
    stores: Mutex<HashMap<String, Loaded>>,
    sessions: RwLock<HashMap<String, Arc<SessionSlot>>>,
    jobs: Mutex<HashMap<String, JobStatus>>,
}

/// Shared service state. Cheap to clone.
#[derive(Clone)]
pub struct AppState {
    inner: Arc<Inner>,
}

fn now() -> u64 {
    SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0)
}

impl AppState {
    /// Opens the data directory and restores every journaled session by
    /// replaying its turns. Blocking.
    pub fn open(config: ServiceConfig) -> Result<Self, ServiceError> {
        std::fs::create_dir_all(config.data_dir.join("sessions")).map_err(ServiceError::internal)?;
        let state = Self {
            inner: Arc::new(Inner {
                config,
                stores: Mutex::new(HashMap::new()),
                sessions: RwLock::new(HashMap::new()),
                jobs: Mutex::new(HashMap::new()),
            }),
        };
        let dir = state.sessions_dir();
        let mut journals: Vec<PathBuf> = std::fs::read_dir(&dir)
            .map_err(ServiceError::internal)?
            .filter_map(|e| e.ok().map(|e| e.path()))
            .filter(|p| p.extension().is_some_and(|e| e == "jsonl") && !p.to_string_lossy().ends_with(".turns.jsonl"))
            .collect();
        journals.sort();
        for path in journals {
            match state.restore(&path) {
                Ok(id) => tracing::info!(session = %id, "restored session"),
                Err(e) => tracing::warn!(journal = %path.display(), error = %e, "cannot restore session"),
            }
        }
        Ok(state)
    }

    pub fn data_dir(&self) -> &Path {
        &self.inner.config.data_dir
    }

    fn sessions_dir(&self) -> PathBuf {
        self.data_dir().join("sessions")
    }

    /// The scenario and its store; ingests on first use. Blocking.
    pub fn scenario_store(&self, name: &str) -> Result<Loaded, ServiceError> {
        let scenario = find_scenario(self.data_dir(), name)?;
        let mut stores = self.inner.stores.lock().unwrap();
        if let Some(hit) = stores.get(&scenario.slug) {
            return Ok(hit.clone());
        }
        let store = load_or_ingest(self.data_dir(), &scenario, &self.inner.config.embedder)?;
        let entry = (Arc::new(scenario), Arc::new(store));
        stores.insert(entry.0.slug.clone(), entry.clone());
        Ok(entry)
    }

    fn build_slot(
        &self,
        id: &str,
        scenario_name: &str,
        condition: Condition,
        created_at: u64,
    ) -> Result<SessionSlot, ServiceError> {
        let (scenario, store) = self.scenario_store(scenario_name)?;
        let backend =
            (self.inner.config.backends)(&scenario, condition).map_err(|e| ServiceError::Backend(e.to_string()))?;
        let dir = self.sessions_dir();
        let recording =
            RecordingBackend::open(backend, dir.join(format!("{id}.turns.jsonl"))).map_err(ServiceError::internal)?;
        let session =
            Session::new(scenario.clone(), store, Arc::new(recording), condition, self.inner.config.agents.clone())?;
        let journal = Journal::create(&dir.join(format!("{id}.jsonl"))).map_err(ServiceError::internal)?;
        Ok(SessionSlot {
            id: id.to_string(),
            scenario: scenario.slug.clone(),
            condition,
            created_at,
            view: Mutex::new(View::default()),
            live: Arc::new(tokio::sync::Mutex::new(Live { session, journal })),
        })
    }

    /// Starts a session on a scenario. Blocking.
    pub fn create_session(&self, scenario: &str, condition: Condition) -> Result<SessionInfo, ServiceError> {
        let id = Uuid::new_v4().to_string();
        let slot = self.build_slot(&id, scenario, condition, now())?;
        let created = JournalEntry::Created {
            session_id: id.clone(),
            scenario: slot.scenario.clone(),
            condition,
            created_at: slot.created_at,
        };
        slot.live
            .try_lock()
            .expect("new session is unshared")
            .journal
            .append(&created)
            .map_err(ServiceError::internal)?;
        let info = slot.info();
        self.inner.sessions.write().unwrap().insert(id, Arc::new(slot));
        Ok(info)
    }

    fn restore(&self, path: &Path) -> Result<String, ServiceError> {
        let entries: Vec<JournalEntry> = read_lines(path).map_err(ServiceError::internal)?;
        let Some(JournalEntry::Created { session_id, scenario, condition, created_at }) = entries.first() else {
            return Err(ServiceError::Internal("journal does not start with a creation entry".into()));
        };
        let slot = self.build_slot(session_id, scenario, *condition, *created_at)?;
        {
            let mut live = slot.live.try_lock().expect("restored session is unshared");
            for entry in &entries[1..] {
                // Failed turns are replayed too: they may have changed the
                // conversation before failing.
                let _ = apply(&mut live.session, entry);
                slot.refresh(&live.session);
            }
        }
        self.inner.sessions.write().unwrap().insert(session_id.clone(), Arc::new(slot));
        Ok(session_id.clone())
    }

    pub(crate) fn session(&self, id: &str) -> Result<Arc<SessionSlot>, ServiceError> {
        self.inner.sessions.read().unwrap().get(id).cloned().ok_or_else(|| ServiceError::UnknownSession(id.into()))
    }

    pub fn sessions(&self) -> Vec<SessionInfo> {
        let mut out: Vec<SessionInfo> = self.inner.sessions.read().unwrap().values().map(|s| s.info()).collect();
        out.sort_by(|a, b| (a.created_at, &a.session_id).cmp(&(b.created_at, &b.session_id)));
        out
    }

    /// Registers an evaluation job and runs it on a background thread.
    pub fn start_eval(&self, config: EvalConfig) -> Result<String, ServiceError> {
        config.validate().map_err(|e| ServiceError::Invalid(e.to_string()))?;
        let id = Uuid::new_v4().to_string();
        self.inner.jobs.lock().unwrap().insert(id.clone(), JobStatus::Running);
        let state = self.clone();
        let job = id.clone();
        std::thread::spawn(move || {
            let status = match mup_eval::run_eval(&config) {
                Ok(report) => JobStatus::Done { report },
                Err(e) => JobStatus::Failed { error: e.to_string() },
            };
            tracing::info!(job = %job, "eval job finished");
            state.inner.jobs.lock().unwrap().insert(job, status);
        });
        Ok(id)
    }

    pub fn job(&self, id: &str) -> Result<JobStatus, ServiceError> {
        self.inner.jobs.lock().unwrap().get(id).cloned().ok_or_else(|| ServiceError::UnknownJob(id.into()))
    }
}
