//! Library side of the `tikfar` command-line tool: configuration, file
//! formats and the subcommand implementations.

pub mod commands;
pub mod config;
pub mod error;
pub mod io;

/// Version stamped into every JSON artifact and required in config files.
pub const SCHEMA_VERSION: u32 = 1;
