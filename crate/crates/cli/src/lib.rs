//! Batch driver for the `copop` binary: configuration, dispatch and
//! artifact output.

pub mod config;
pub mod output;
pub mod run;

pub use config::{parse_config, ConfigError, RunConfig};
pub use run::{run, Artifact, Command};
