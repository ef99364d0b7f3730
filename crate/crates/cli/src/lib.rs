//! Command-line front end for the forecast instability tests: run the
//! tests on a CSV file, simulate rejection rates for a design, or
//! regenerate a named table or figure.
//!
//! Exit status is 0 when no test rejects, 1 when one does and 2 on any
//! error.

pub mod commands;
pub mod config;
pub mod data;
pub mod error;

pub use commands::{cmd_reproduce, cmd_simulate, cmd_test, run, Outcome, SCHEMA_VERSION};
pub use config::{resolve, Cli, Mode, Settings, SEED_ENV};
pub use error::{CliError, CliResult};

pub const EXIT_NO_REJECTION: i32 = 0;
pub const EXIT_REJECTION: i32 = 1;
pub const EXIT_ERROR: i32 = 2;

/// Exit status for a finished command.
pub fn exit_code(result: &CliResult<Outcome>) -> i32 {
    match result {
        Ok(o) if o.rejected => EXIT_REJECTION,
        Ok(_) => EXIT_NO_REJECTION,
        Err(_) => EXIT_ERROR,
    }
}
