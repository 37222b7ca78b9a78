//! HTTP service for planning sessions and evaluation jobs, plus the client
//! used by the `mup` command-line tool.

mod api;
pub mod client;
mod error;
mod journal;
mod state;

pub use api::router;
pub use error::ServiceError;
pub use journal::JournalEntry;
pub use state::{
    backend_factory, default_embedder, find_scenario, ingest_into, load_backend_config, AppState, BackendFactory,
    JobStatus, ServiceConfig, SessionInfo,
};
