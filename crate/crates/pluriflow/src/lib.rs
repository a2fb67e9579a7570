//! Scenario files, artifacts and the command line around `pluriflow-core`.

pub mod error;
pub mod families;
pub mod io;
pub mod manufacture;
pub mod run;
pub mod scenario;
pub mod study;

pub use error::{Result, RunError};
pub use run::{run_scenario, verify_stored, Outcome, RunOptions};
pub use scenario::{build, Built, Scenario};
pub use study::{run_study, StudyResult};
