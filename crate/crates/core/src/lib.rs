//! Planning and simulation for human-humanoid collaborative assembly cells.
//!
//! The pipeline runs dataset validation, rule-based allocation, takt-based
//! line balancing, safety checks and a seeded discrete-event simulation of
//! the resulting serial line.

pub mod allocate;
pub mod balance;
pub mod cli;
pub mod model;
pub mod safety;
pub mod scenarios;
pub mod simulate;
