//! Command-line front end for the `usm` library.

pub mod commands;
pub mod fasta;

pub use commands::{run, Cli};
