//! TOML scenario files.

use std::path::Path;

use rampc_core::harness::Scenario;

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("parse error: {0}")]
    Parse(String),
    #[error("invalid field `{0}`")]
    Invalid(String),
    #[error("{0}")]
    Controller(String),
}

/// Parses and validates; missing keys take the default scenario values.
pub fn parse_config(text: &str) -> Result<Scenario, ConfigError> {
    let cfg: Scenario = toml::from_str(text).map_err(|e| ConfigError::Parse(e.to_string()))?;
    cfg.validate().map_err(|f| ConfigError::Invalid(f.to_string()))?;
    Ok(cfg)
}

pub fn load_config(path: &Path) -> Result<Scenario, ConfigError> {
    let text = std::fs::read_to_string(path)
        .map_err(|source| ConfigError::Io { path: path.display().to_string(), source })?;
    parse_config(&text)
}

pub fn to_toml(cfg: &Scenario) -> String {
    toml::to_string_pretty(cfg).expect("scenario is representable as TOML")
}

pub fn save_config(cfg: &Scenario, path: &Path) -> std::io::Result<()> {
    std::fs::write(path, to_toml(cfg))
}
