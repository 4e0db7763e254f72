//! Campaign driver for the PMSM multi-objective design toolkit: config
//! loading, artifact files and the commands behind the `pmsm-moo` binary.

pub mod artifacts;
pub mod commands;
pub mod config;
pub mod error;

pub use config::{CampaignConfig, Mode, Suite, Variant};
pub use error::CliError;
