//! Scenario-file front end for `syncflow`: load a JSON scenario, simulate
//! it, run the requested checks and write CSV, JSON and gnuplot output.

// NaN-rejecting comparisons such as `!(x > 0.0)` are deliberate.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod checks;
pub mod commands;
pub mod error;
pub mod output;
pub mod scenario;

pub use commands::{configure_threads, execute, write_outputs, Execution};
pub use error::{CliError, ExitStatus};
pub use scenario::{load_scenario, parse_scenario, Scenario};
