//! Experiment harness around the core market library: config files, dataset
//! IO, the training protocols, and report emission. The `featmarket` binary
//! is a thin wrapper over [`experiment::run_experiment`].

pub mod config;
pub mod dataio;
pub mod error;
pub mod experiment;
pub mod report;

pub use config::{ClassifierSpec, CommandKind, DataSource, ExperimentConfig, SplitFractions};
pub use dataio::{load_dataset, rescale_budgets, write_dataset, DataError};
pub use error::CliError;
pub use experiment::run_experiment;
