use std::path::{Path, PathBuf};
use std::time::Instant;

use anyhow::Context;
use serde::Serialize;

/// Written as `manifest-<command>.json` next to a command's outputs.
#[derive(Debug, Serialize)]
pub struct RunManifest {
    pub command: String,
    pub parameters: serde_json::Value,
    pub inputs: Vec<PathBuf>,
    pub outputs: Vec<PathBuf>,
    pub master_seed: Option<u64>,
    pub tool_version: String,
    pub wall_clock_seconds: f64,
}

pub struct ManifestBuilder {
    command: &'static str,
    started: Instant,
    parameters: serde_json::Value,
    master_seed: Option<u64>,
    inputs: Vec<PathBuf>,
    outputs: Vec<PathBuf>,
}

impl ManifestBuilder {
    pub fn start(command: &'static str, parameters: impl Serialize, master_seed: Option<u64>) -> Self {
        Self {
            command,
            started: Instant::now(),
            parameters: serde_json::to_value(parameters).unwrap_or(serde_json::Value::Null),
            master_seed,
            inputs: Vec::new(),
            outputs: Vec::new(),
        }
    }

    pub fn input(&mut self, path: &Path) {
        self.inputs.push(path.to_path_buf());
    }

    pub fn output(&mut self, path: &Path) {
        self.outputs.push(path.to_path_buf());
    }

    pub fn finish(self, dir: &Path) -> anyhow::Result<PathBuf> {
        let path = dir.join(format!("manifest-{}.json", self.command));
        let manifest = RunManifest {
            command: self.command.to_string(),
            parameters: self.parameters,
            inputs: self.inputs,
            outputs: self.outputs,
            master_seed: self.master_seed,
            tool_version: env!("CARGO_PKG_VERSION").to_string(),
            wall_clock_seconds: self.started.elapsed().as_secs_f64(),
        };
        let text = serde_json::to_string_pretty(&manifest)?;
        std::fs::write(&path, text + "\n").with_context(|| format!("writing {}", path.display()))?;
        Ok(path)
    }
}
