//! Command-line front end for `tailor-core`: config files, pool files,
//! metric and trace export, and trial-parallel execution.

pub mod cli;
pub mod config;
pub mod error;
pub mod output;
pub mod parallel;
pub mod pool_io;

pub use error::CliError;
