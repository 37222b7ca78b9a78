//! Shared domain types: users, rules, plans, conflicts and scenarios.
//!
//! Everything here is plain data. Behaviour beyond construction and
//! validation lives in [`crate::conflict`] and [`crate::scenarios`].

mod ids;
mod plan;
mod predicate;
mod rule;
mod scenario;
mod time;
mod validate;

pub use ids::{ConflictId, RuleId, UserId};
pub use plan::{
    Conflict, ConflictContext, ConflictKind, Outcome, Plan, PlanAction, PlanSet, ReassignTarget, Reassignment,
    Resolution,
};
pub use predicate::{ActionSpec, PlanPredicate};
pub use rule::{
    ActivityClass, Comparator, Condition, Constraint, Payload, PolicyKind, PolicyVariant, ResolutionPolicy, Rule,
    RuleKind, ScheduleEntry, Setting, UserProfile, PHYSICAL_ATTRIBUTES,
};
pub use scenario::{ExpectedConflict, ReferenceSolution, Scenario, BUNDLED_CONFLICTS, BUNDLED_RULES, BUNDLED_USERS};
pub use time::{clock, parse_clock, Minute, ParseWeekdayError, TimeWindow, Weekday, MINUTES_PER_DAY};
pub use validate::{validate_scenario, ValidationError};
