//! Command-line front end for the `abc-core` samplers: TOML configs,
//! population CSV files, JSON reports and the replicate comparison harness.

pub mod compare;
pub mod config;
mod error;
pub mod persist;
pub mod report;
pub mod run;

pub use error::{CliError, Result};
