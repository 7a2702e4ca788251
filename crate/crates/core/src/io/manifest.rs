//! JSON run manifest: configuration echo, versions, produced files and
//! timings (the one artifact allowed to vary between identical runs).

use crate::error::Result;
use serde::Serialize;
use std::collections::BTreeMap;
use std::path::Path;

/// Parsed copy of the configuration file, echoed into the manifest.
pub type ConfigEcho = toml::Value;

#[derive(Debug, Clone, Serialize)]
pub struct Manifest {
    pub tool: String,
    pub version: String,
    pub command: String,
    pub config_path: String,
    pub config: toml::Value,
    pub mode: String,
    pub solver: String,
    pub outputs: Vec<String>,
    pub timings_seconds: BTreeMap<String, f64>,
}

impl Manifest {
    pub fn new(
        command: &str,
        config_path: &Path,
        config: toml::Value,
        mode: &str,
        solver: &str,
    ) -> Self {
        Self {
            tool: "faultflow".into(),
            version: env!("CARGO_PKG_VERSION").into(),
            command: command.into(),
            config_path: config_path.display().to_string(),
            config,
            mode: mode.into(),
            solver: solver.into(),
            outputs: Vec::new(),
            timings_seconds: BTreeMap::new(),
        }
    }
}

pub fn write_manifest(path: &Path, manifest: &Manifest) -> Result<()> {
    let text = serde_json::to_string_pretty(manifest).map_err(|e| crate::error::Error::Io(std::io::Error::other(e)))?;
    std::fs::write(path, text)?;
    Ok(())
}
