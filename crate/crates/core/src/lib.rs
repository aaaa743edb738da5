//! System-level simulator for UAV-assisted space-air-ground networks.
//!
//! Ground users are served by fixed small cells and by UAV base stations
//! whose trajectories and channels are chosen by one of several learning or
//! search schemes. Each step solves the coupled cell-load equations and
//! scores the network by user fairness and base-station load.

pub mod engine;
pub mod environment;
pub mod error;
pub mod learners;
pub mod radio;
pub mod report;
pub mod scenario;

pub use engine::{run_campaign, run_once, run_with_observer, MetricsRecord, RunResult, Simulation};
pub use error::{Result, SimError};
pub use scenario::{reference_scenario, Scenario, SchemeId};
