//! Experiment harness behind the `invlrr` binary.

// `!(x > 0.0)` is used on purpose so NaN fails validation.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod config;
pub mod error;
pub mod harness;
pub mod matfile;

pub use config::ExperimentConfig;
pub use error::{CliError, CliResult};
pub use harness::Harness;
