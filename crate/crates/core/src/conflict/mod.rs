//! Deterministic conflict detection, policy resolution and plan validation.
//!
//! These are pure functions over [`crate::model`] data. They back the
//! planner's `detect_conflicts` tool and serve as the evaluation oracle.

mod check;
mod detect;
mod resolve;

pub use check::{eval, validate_plan, CheckError, PlanReport, PlanValidator, Violation};
pub use detect::{detect_conflicts, sort_conflicts};
pub use resolve::{resolve, ResolutionContext, ResolveError};
