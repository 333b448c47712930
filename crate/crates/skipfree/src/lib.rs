//! File formats, parallel drivers and the command line on top of `skipfree-core`.

pub mod cli;
pub mod error;
pub mod format;
pub mod io;
pub mod parallel;

pub use cli::run;
pub use error::{CliError, CliResult};
