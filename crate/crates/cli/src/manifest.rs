//! Per-run provenance written next to the outputs.
//!
//! `manifest.toml` is a valid experiment config (the resolved settings,
//! with absolute paths) plus a `[manifest]` table, so
//! `semalloc <command> --config manifest.toml` repeats the run.

use std::collections::BTreeMap;
use std::path::Path;
use std::time::{SystemTime, UNIX_EPOCH};

use serde::Serialize;

use crate::config::ExperimentConfig;
use crate::error::CliError;
use crate::io::file_digest;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunManifest {
    pub tool: String,
    pub tool_version: String,
    pub command: String,
    /// Positional arguments, as absolute paths where they name files.
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub args: Vec<String>,
    pub seed: u64,
    pub started_unix: u64,
    pub finished_unix: u64,
    /// SHA-256 of every file read, keyed by absolute path.
    pub inputs: BTreeMap<String, String>,
    /// SHA-256 of every file written, keyed by file name.
    pub outputs: BTreeMap<String, String>,
}

pub fn unix_now() -> u64 {
    SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_secs())
        .unwrap_or(0)
}

impl RunManifest {
    pub fn start(command: &str, seed: u64) -> Self {
        let now = unix_now();
        Self {
            tool: env!("CARGO_PKG_NAME").into(),
            tool_version: env!("CARGO_PKG_VERSION").into(),
            command: command.into(),
            args: Vec::new(),
            seed,
            started_unix: now,
            finished_unix: now,
            inputs: BTreeMap::new(),
            outputs: BTreeMap::new(),
        }
    }

    pub fn record_input(&mut self, path: &Path) -> Result<(), CliError> {
        let abs = std::path::absolute(path).unwrap_or_else(|_| path.to_path_buf());
        self.inputs.insert(abs.display().to_string(), file_digest(path)?);
        Ok(())
    }

    pub fn record_output(&mut self, path: &Path) -> Result<(), CliError> {
        let name = path
            .file_name()
            .map(|n| n.to_string_lossy().into_owned())
            .unwrap_or_else(|| path.display().to_string());
        self.outputs.insert(name, file_digest(path)?);
        Ok(())
    }

    /// Renders the manifest, preceded by the config echo when present.
    pub fn to_toml(&self, config: Option<&ExperimentConfig>) -> Result<String, CliError> {
        let ser = |e: toml::ser::Error| CliError::Input(format!("manifest: {e}"));
        let mut table = match config {
            Some(c) => toml::Table::try_from(c).map_err(ser)?,
            None => toml::Table::new(),
        };
        table.insert("manifest".into(), toml::Value::try_from(self).map_err(ser)?);
        toml::to_string(&table).map_err(ser)
    }

    pub fn write(mut self, path: &Path, config: Option<&ExperimentConfig>) -> Result<(), CliError> {
        self.finished_unix = unix_now();
        std::fs::write(path, self.to_toml(config)?)?;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn manifest_parses_back_as_config() {
        let cfg = ExperimentConfig::default();
        let m = RunManifest::start("sweep", cfg.seed);
        let text = m.to_toml(Some(&cfg)).unwrap();
        let back = ExperimentConfig::from_toml(&text).unwrap();
        assert!(back.manifest.is_some());
        assert_eq!(ExperimentConfig { manifest: None, ..back }, cfg);
    }
}
