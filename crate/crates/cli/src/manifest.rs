use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::Serialize;
use sha2::{Digest, Sha256};

use nqp_core::container::write_atomic;

use crate::error::{CliError, CliResult};

pub fn sha256_hex(bytes: &[u8]) -> String {
    format!("{:x}", Sha256::digest(bytes))
}

pub fn file_sha256(path: &Path) -> CliResult<String> {
    let bytes = std::fs::read(path).map_err(|e| CliError::io(path, e))?;
    Ok(sha256_hex(&bytes))
}

#[derive(Debug, Serialize)]
pub struct FileRecord {
    pub path: String,
    pub sha256: String,
}

impl FileRecord {
    fn of(path: &Path) -> CliResult<Self> {
        Ok(Self {
            path: path.display().to_string(),
            sha256: file_sha256(path)?,
        })
    }
}

/// Provenance of one command run, written once the outputs exist.
#[derive(Debug, Serialize)]
pub struct RunManifest {
    pub command: String,
    pub tool_version: String,
    pub config_sha256: String,
    pub inputs: Vec<FileRecord>,
    pub outputs: Vec<FileRecord>,
    pub wall_seconds: f64,
}

pub struct ManifestBuilder {
    command: String,
    config_sha256: String,
    inputs: Vec<PathBuf>,
    start: Instant,
}

impl ManifestBuilder {
    pub fn start(command: &str, config_text: &str) -> Self {
        Self {
            command: command.to_string(),
            config_sha256: sha256_hex(config_text.as_bytes()),
            inputs: Vec::new(),
            start: Instant::now(),
        }
    }

    pub fn input(&mut self, path: &Path) {
        self.inputs.push(path.to_path_buf());
    }

    /// Hashes inputs and outputs and writes `manifest-<command>.json` into
    /// `dir` atomically.
    pub fn finish(self, dir: &Path, outputs: &[PathBuf]) -> CliResult<PathBuf> {
        let manifest = RunManifest {
            command: self.command.clone(),
            tool_version: env!("CARGO_PKG_VERSION").to_string(),
            config_sha256: self.config_sha256,
            inputs: self.inputs.iter().map(|p| FileRecord::of(p)).collect::<CliResult<_>>()?,
            outputs: outputs.iter().map(|p| FileRecord::of(p)).collect::<CliResult<_>>()?,
            wall_seconds: self.start.elapsed().as_secs_f64(),
        };
        let path = dir.join(format!("manifest-{}.json", self.command));
        let text = serde_json::to_string_pretty(&manifest).expect("manifest serializes");
        write_atomic(&path, text.as_bytes())?;
        Ok(path)
    }
}
