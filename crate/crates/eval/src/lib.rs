//! Runs planning sessions over scenarios and scores the resulting weekday
//! plans with the deterministic plan validator.

mod config;
mod report;
mod run;

pub use config::{EvalBackend, EvalConfig, EvalError};
pub use report::{emit_report, render, Cell, EvalReport, InstanceResult, ReportFormat, TrialResult};
pub use run::{day_query, resolve_scenarios, run_eval, run_trial};
