//! Command-line front-end for the `netepi` engine: JSON configs in, CSV/JSON artifacts out.

pub mod commands;
pub mod config;
pub mod error;
pub mod output;

pub use commands::{execute, run, Command, Outcome};
pub use config::{parse_config, parse_str, to_canonical_json, Config};
pub use error::CliError;
