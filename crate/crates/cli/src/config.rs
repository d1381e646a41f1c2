use std::fs;
use std::path::Path;

use alert_swarm::WorldConfig;

use crate::error::{CliError, Result};

/// Parses a TOML config, filling missing keys with defaults, and checks
/// every invariant.
pub fn validate_config(path: &Path) -> Result<WorldConfig> {
    let text = fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    parse_config(path, &text)
}

pub fn parse_config(path: &Path, text: &str) -> Result<WorldConfig> {
    let config: WorldConfig = toml::from_str(text).map_err(|e| CliError::Parse {
        path: path.to_path_buf(),
        message: e.message().to_string(),
    })?;
    config.validate().map_err(|source| CliError::Validation {
        path: path.to_path_buf(),
        source,
    })?;
    Ok(config)
}
