//! Scenario files, reports and the `secest` command-line tool built on
//! [`secest_core`].

pub mod cli;
pub mod config;
pub mod error;
pub mod report;
pub mod verify;

pub use error::{CliError, CliResult, ErrorKind};
