//! Structured production systems: structures, world states, rules and an
//! engine that fires one triggered rule instance per step.

pub mod dsl;
pub mod encodings;
pub mod engine;
pub mod eval;
pub mod program;
pub mod rules;
pub mod state;
pub mod strategies;
pub mod structure;
pub mod term;
pub mod uncertainty;
