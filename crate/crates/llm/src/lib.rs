//! Uniform chat-completion interface over remote, scripted and replayed
//! backends, the JSON tool protocol, and the task orchestrator that runs
//! agents on top of it.

mod backend;
mod config;
mod error;
mod gateway;
mod message;
pub mod orchestrator;
mod remote;
mod replay;
mod tools;
mod trace;

pub use backend::{prompt_hash, ChatBackend, FnBackend, ScriptedBackend, SequenceBackend};
pub use config::{build_backend, BackendConfig};
pub use error::LlmError;
pub use gateway::complete;
pub use message::{Message, Role, ToolCall};
pub use remote::{RemoteBackend, RemoteConfig};
pub use replay::{RecordedTurn, Recorder, ReplayBackend};
pub use tools::{parse_tool_call, ToolSchema};
pub use trace::{Trace, TraceEvent};
