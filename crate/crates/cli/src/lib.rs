//! Config-driven experiment runner: JSON config in, `report.json` and CSV files out.

pub mod config;
pub mod error;
pub mod expr;
pub mod run;
pub mod sweep;

pub use config::{Experiment, ExperimentConfig, Task};
pub use error::CliError;

#[cfg(doctest)]
#[doc = include_str!("../../../book/src/cli.md")]
struct CliGuide;
