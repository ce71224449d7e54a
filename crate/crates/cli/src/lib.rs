//! Command-line front end for `qsync-core`: configuration files, figure
//! presets, parallel resumable sweeps and CSV output.

pub mod commands;
pub mod config;
pub mod error;
pub mod output;
pub mod presets;
pub mod sweep;

pub use commands::run;
pub use config::{load_config, parse_config, resolve, Command, ConfigDoc, Overrides, RunConfig};
pub use error::CliError;
pub use presets::{Outcome, Preset};
