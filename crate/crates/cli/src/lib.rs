//! Command-line front end: dataset resolution, bench runs, analytics, the
//! HTTP service and the terminal viewer.

pub mod analyze;
pub mod bench;
pub mod datasets;
pub mod error;
pub mod server;
pub mod transcode;
pub mod viewer;

pub use error::{CliError, Result};
