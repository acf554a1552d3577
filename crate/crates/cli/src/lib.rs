//! Batch front end for the `sgrif` library: configuration, a worker pool
//! over image directories, and CSV/JSON report emission.

pub mod cli;
pub mod config;
pub mod corpus;
pub mod error;
pub mod report;
pub mod run;
pub mod tools;

pub use config::{Mode, RunConfig};
pub use error::CliError;
pub use run::{run, RunSummary};
