//! Batch front-end for rank-one construction analyses: TOML run configs in,
//! JSON, CSV and text reports out.

pub mod config;
pub mod report;
pub mod run;

pub use config::{Analysis, ConfigError, RunConfig, SpecConfig};
pub use run::{run, Report};
