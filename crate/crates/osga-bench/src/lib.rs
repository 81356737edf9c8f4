//! Benchmark harness for the composite-objective solvers: generates problem
//! instances from flat config files, runs every configured solver with
//! matched seeds and starting points, and writes trace/summary/profile CSV
//! bundles plus optional PGM images.

pub mod checks;
pub mod config;
pub mod error;
pub mod generate;
pub mod metrics;
pub mod pgm;
pub mod profile;
pub mod run;

pub use config::{apply_overrides, load_config, parse_config, ExperimentConfig, Overrides};
pub use error::{BenchError, Result};
pub use run::{run_experiment, RunArtifacts};
