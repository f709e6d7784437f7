//! Experiment runner: fixture catalog, configuration schema and report writing.

mod config;
mod fixtures;
mod run;

pub use config::{ExperimentConfig, NamedObservable, Task};
pub use fixtures::{list_fixtures, load_fixture, Fixture, FixtureInfo, ROTATION_ANGLE};
pub use run::{run, RunOutcome};

/// Environment variable naming the default output directory.
pub const OUT_DIR_ENV: &str = "THERMOFORM_OUT";
