//! Command-line harness around the residue matrix multiplication library:
//! seeded matrix generation, a small binary matrix file format, parameter
//! sweeps with CSV output, and bit-budget tabulation.

pub mod cmd;
pub mod config;
pub mod error;
pub mod fileio;
pub mod gen;
pub mod kplot;
pub mod sweep;

pub use error::{CliError, Result};
