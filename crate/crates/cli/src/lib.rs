//! Scenario files, run orchestration and output for elk.

pub mod auditlog;
pub mod profile;
pub mod report;
pub mod run;
pub mod scenario;
pub mod snapshot;

pub use run::{run, RunError, RunOptions};
pub use scenario::{load_scenario, parse_scenario, Prepared, Scenario, ScenarioError};
