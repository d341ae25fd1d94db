//! File formats, CSV reports, and subcommand plumbing for the `sica`
//! command-line tool. The numerical work lives in `sica-core`; this crate
//! owns everything that touches the filesystem.

pub mod commands;
pub mod error;
pub mod io;
pub mod report;

pub use error::CliError;
