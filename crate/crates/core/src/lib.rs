//! Simulation of multi-user task offloading in mobile edge computing, with
//! bandit policies that learn which of local, edge or cloud execution each
//! user should choose.
//!
//! [`Environment`] holds the stochastic delay model; the [`policy`] module
//! holds the learners; [`metrics`] turns their traces into regret curves; and
//! [`harness`] drives seeded experiments from JSON configs.

pub mod env;
pub mod error;
pub mod harness;
pub mod metrics;
pub mod model;
pub mod policy;

pub use env::{build_environment, Environment, FixedWorld, OracleReport, RoundOutcome, World};
pub use error::{Error, Result};
pub use metrics::{RunTrace, SlotRecord};
pub use model::{Action, ActionId, ActionSpace, Method, SystemConfig, Task};
