//! Data model, conflict engine and bundled scenarios for multi-user
//! personalization.

pub mod conflict;
pub mod model;
pub mod scenarios;
