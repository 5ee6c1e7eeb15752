//! Configuration loading, presets and output writers behind the
//! `wmac-formation` command-line tool.

pub mod config;
pub mod error;
pub mod matrix;
pub mod output;
pub mod presets;
pub mod sweep;

pub use config::{load_config, parse_config_str, to_toml_string};
pub use error::{CliError, Result};
pub use output::{emit_outputs, Metrics};
pub use presets::{hexagon6, preset};
pub use sweep::{run_sweep, SweepSummary};
