//! TOML configuration files.

use std::path::Path;

use wmac_formation::SimConfig;

use crate::error::{CliError, Result};

/// Seeds must fit a TOML integer so the resolved config round-trips.
pub const MAX_SEED: u64 = i64::MAX as u64;

/// Parses and validates a configuration document.
pub fn parse_config_str(text: &str) -> Result<SimConfig> {
    if text.trim().is_empty() {
        return Err(CliError::Config("empty configuration".into()));
    }
    let config: SimConfig = toml::from_str(text).map_err(|e| CliError::Config(e.to_string()))?;
    check(&config)?;
    Ok(config)
}

pub fn load_config(path: &Path) -> Result<SimConfig> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    parse_config_str(&text).map_err(|e| match e {
        CliError::Config(msg) => CliError::Config(format!("{}: {msg}", path.display())),
        other => other,
    })
}

pub fn check(config: &SimConfig) -> Result<()> {
    config.validate().map_err(|e| CliError::Config(e.to_string()))?;
    if config.seed > MAX_SEED {
        return Err(CliError::Config(format!(
            "invalid config at `seed`: must not exceed {MAX_SEED}, got {}",
            config.seed
        )));
    }
    Ok(())
}

pub fn to_toml_string(config: &SimConfig) -> Result<String> {
    toml::to_string(config).map_err(|e| CliError::Serialize(e.to_string()))
}
