//! Scenario-driven front end for `smgame-core`.

pub mod error;
pub mod run;
pub mod scenario;

pub use error::CliError;
pub use run::{run_scenario, Manifest, Overrides, RunStatus, RunSummary};
pub use scenario::{Analysis, Scenario, SCHEMA};
