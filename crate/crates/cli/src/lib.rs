//! Config-driven batch front-end for `wave-sim-core`.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod app;
pub mod config;

pub use app::{execute, run, Outcome, OutputFile};
pub use config::{parse_config, ConfigError, Mode, Overrides, RunConfig};
