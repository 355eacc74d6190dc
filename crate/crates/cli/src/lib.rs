//! Scenario files, reports, sweeps and verification for the `gptcast` tool.

pub mod demos;
pub mod report;
pub mod runner;
pub mod scenario;
pub mod sweep;
pub mod verify;

pub use runner::{run_scenario, RunOptions, RunOutput};
pub use scenario::{CompositeChoice, Scenario, ScenarioError, ScenarioTask, SweepConfig};
