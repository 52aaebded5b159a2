//! Deterministic, testable implementation of the Bullshark DAG-BFT
//! protocol family: the asynchronous variant with steady-state and
//! fallback leaders, and the partially synchronous variant, both running
//! atop a simulated reliable-broadcast network driven by an adversarial
//! scheduler.
//!
//! Layers, bottom up:
//!
//! - [`committee`], [`vertex`], [`dag`]: domain types and the pure graph
//!   utilities (paths, leader lookups, weak-edge completion).
//! - [`coin`]: per-wave leader election with a harness-enforced reveal
//!   gate standing in for unpredictability.
//! - [`transport`]: reliable broadcast with agreement, integrity and
//!   validity, delivery timing chosen by a pluggable scheduler policy,
//!   and an eventual-synchrony clamp after GST.
//! - [`party`]: the per-party DAG construction state machine (round
//!   advancement with embedded timeouts, buffering, round jumps).
//! - [`consensus`]: vote types, direct commits, the backward walk, and
//!   deterministic total ordering; [`gc`] adds timestamp-driven garbage
//!   collection with post-GST fairness.
//! - [`world`], [`scenario`], [`trace`], [`report`], [`checkers`],
//!   [`replay`]: the scenario-driven simulation harness and its
//!   executable property checkers.

pub mod checkers;
pub mod coin;
pub mod committee;
pub mod consensus;
pub mod dag;
pub mod error;
pub mod gc;
pub mod observer;
pub mod party;
pub mod replay;
pub mod report;
pub mod scenario;
pub mod script;
pub mod trace;
pub mod transport;
pub mod vertex;
pub mod world;

pub use committee::{Committee, PartyId, Round, SimTime, Wave};
pub use error::{ConfigError, SimError};
pub use report::RunReport;
pub use scenario::{FaultKind, FaultSpec, NetworkMode, Protocol, Scenario, SchedulerPolicy};
pub use world::{run_scenario, SimOutcome};
