//! Command-line front end for `semalloc`: surface fitting, single solves,
//! target sweeps with CSV/SVG output, and Monte Carlo BER validation.
//!
//! Exit codes: 0 success, 2 input error, 3 numerical warning,
//! 4 infeasible target.

pub mod commands;
pub mod config;
pub mod error;
pub mod io;
pub mod manifest;
pub mod svg;

pub use commands::{run, Cli, Command};
pub use error::CliError;
