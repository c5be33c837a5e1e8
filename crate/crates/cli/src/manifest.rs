//! Run manifests: written before any compute, finalized after, and only
//! marked complete once every file they name exists.

use std::path::{Path, PathBuf};
use std::time::{Instant, SystemTime, UNIX_EPOCH};

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::error::{CliError, CliResult};

pub const MANIFEST_NAME: &str = "manifest.json";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Status {
    Running,
    Complete,
    Failed,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunTiming {
    pub seed: u64,
    pub seconds: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub tool: String,
    pub version: String,
    pub command: String,
    pub status: Status,
    pub config: Value,
    pub seeds: Vec<u64>,
    /// Output files, relative to the manifest's directory.
    pub outputs: Vec<String>,
    pub started_unix: f64,
    pub finished_unix: Option<f64>,
    pub elapsed_seconds: Option<f64>,
    pub runs: Vec<RunTiming>,
    /// Command-specific notes (grid layout, checks, summaries).
    #[serde(default, skip_serializing_if = "Value::is_null")]
    pub details: Value,
}

fn unix_now() -> f64 {
    SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map_or(0.0, |d| d.as_secs_f64())
}

/// An open manifest bound to its output directory.
pub struct ManifestWriter {
    dir: PathBuf,
    clock: Instant,
    pub manifest: RunManifest,
}

impl ManifestWriter {
    /// Creates `dir` if needed and writes the initial manifest.
    pub fn begin(dir: &Path, command: &str, config: Value, seeds: Vec<u64>, outputs: Vec<String>) -> CliResult<Self> {
        std::fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
        let writer = Self {
            dir: dir.to_path_buf(),
            clock: Instant::now(),
            manifest: RunManifest {
                tool: env!("CARGO_PKG_NAME").to_string(),
                version: env!("CARGO_PKG_VERSION").to_string(),
                command: command.to_string(),
                status: Status::Running,
                config,
                seeds,
                outputs,
                started_unix: unix_now(),
                finished_unix: None,
                elapsed_seconds: None,
                runs: Vec::new(),
                details: Value::Null,
            },
        };
        writer.save()?;
        Ok(writer)
    }

    pub fn path(&self) -> PathBuf {
        self.dir.join(MANIFEST_NAME)
    }

    fn save(&self) -> CliResult<()> {
        let path = self.path();
        let text = serde_json::to_string_pretty(&self.manifest).map_err(|e| CliError::runtime(e.to_string()))?;
        std::fs::write(&path, text + "\n").map_err(|e| CliError::io(&path, e))
    }

    fn close(&mut self, status: Status) {
        self.manifest.status = status;
        self.manifest.finished_unix = Some(unix_now());
        self.manifest.elapsed_seconds = Some(self.clock.elapsed().as_secs_f64());
    }

    /// Verifies every named output exists, then records success.
    pub fn finish(mut self) -> CliResult<RunManifest> {
        let missing: Vec<&String> = self
            .manifest
            .outputs
            .iter()
            .filter(|f| !self.dir.join(f).is_file())
            .collect();
        if !missing.is_empty() {
            let msg = format!("outputs missing after run: {missing:?}");
            self.close(Status::Failed);
            self.save()?;
            return Err(CliError::runtime(msg));
        }
        self.close(Status::Complete);
        self.save()?;
        Ok(self.manifest)
    }

    /// Records failure; the original error is returned unchanged.
    pub fn fail(mut self, err: CliError) -> CliError {
        self.close(Status::Failed);
        match self.save() {
            Ok(()) => err,
            Err(save_err) => CliError::runtime(format!("{err}; also failed to update manifest: {save_err}")),
        }
    }
}

pub fn read_manifest(dir: &Path) -> CliResult<RunManifest> {
    let path = dir.join(MANIFEST_NAME);
    let text = std::fs::read_to_string(&path).map_err(|e| CliError::io(&path, e))?;
    serde_json::from_str(&text).map_err(|e| CliError::input(format!("{}: {e}", path.display())))
}
