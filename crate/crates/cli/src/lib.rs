//! Configuration, execution and output for the `convex` command line tool.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod bundle;
pub mod config;
pub mod emit;
pub mod error;
pub mod runner;

pub use bundle::ReportBundle;
pub use config::{BodySource, Command, ExperimentConfig, PositionMode};
pub use emit::{emit_plot_data, write_outputs};
pub use error::{CliError, CliResult};
pub use runner::run;
