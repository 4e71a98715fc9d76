//! Command-line front end for the `ura-bounds` library: `bound`, `find-ebno`,
//! `sweep` and `validate` subcommands, flat config files, a content-hashed
//! result cache and CSV output.

pub mod cache;
pub mod config;
pub mod error;
pub mod output;
pub mod run;

pub use error::CliError;
