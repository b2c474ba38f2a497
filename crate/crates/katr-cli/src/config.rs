//! TOML config file with defaults for the CLI; every key is optional and
//! flags take precedence.
//!
//! ```toml
//! data = "data/city"
//! partition_size = 64
//! seed = 1
//! k = 4
//! alpha = 0.5
//! bind = "127.0.0.1:8080"
//! timeout_ms = 10000
//! ```

use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use serde::Deserialize;

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Config {
    pub data: Option<PathBuf>,
    pub partition_size: Option<usize>,
    pub seed: Option<u64>,
    pub k: Option<usize>,
    pub alpha: Option<f64>,
    pub bind: Option<String>,
    pub timeout_ms: Option<u64>,
}

impl Config {
    pub fn load(path: Option<&Path>) -> Result<Config> {
        match path {
            None => Ok(Config::default()),
            Some(path) => {
                let text = std::fs::read_to_string(path)
                    .with_context(|| format!("reading config {}", path.display()))?;
                toml::from_str(&text)
                    .with_context(|| format!("parsing config {}", path.display()))
            }
        }
    }
}
