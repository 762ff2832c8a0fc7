//! Run manifests: everything needed to reproduce and verify a run.

use std::path::Path;
use std::time::{SystemTime, UNIX_EPOCH};

use firesim_core::config::CONFIG_VERSION;
use firesim_core::io::{file_digest, stat, trace};
use firesim_core::RealizationId;
use serde::{Deserialize, Serialize};

use crate::error::{CliError, CliResult};

pub const MANIFEST_NAME: &str = "manifest.json";

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FormatVersions {
    pub ffca: u16,
    pub ffst: u16,
    pub config: u16,
}

impl Default for FormatVersions {
    fn default() -> Self {
        FormatVersions { ffca: trace::VERSION, ffst: stat::VERSION, config: CONFIG_VERSION }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FileRecord {
    pub path: String,
    pub bytes: u64,
    /// 64-bit FNV-1a of the file contents, as 16 hex digits.
    pub fnv1a64: String,
}

impl FileRecord {
    pub fn of(path: &Path, label: String) -> CliResult<Self> {
        let bytes = std::fs::metadata(path)?.len();
        Ok(FileRecord { path: label, bytes, fnv1a64: format!("{:016x}", file_digest(path)?) })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "state", rename_all = "snake_case")]
pub enum RunStatus {
    Running,
    Ok,
    Failed { exit_code: u8, message: String },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub tool: String,
    pub tool_version: String,
    pub command: String,
    pub args: Vec<String>,
    pub formats: FormatVersions,
    pub workers: Option<usize>,
    /// The resolved configuration the command ran with.
    pub config: serde_json::Value,
    pub master_seeds: Vec<u64>,
    /// Realizations produced (simulate) or consumed (stats, evaluate).
    pub realizations: Vec<RealizationId>,
    pub inputs: Vec<FileRecord>,
    pub outputs: Vec<FileRecord>,
    pub started_unix_ms: u64,
    pub finished_unix_ms: Option<u64>,
    pub status: RunStatus,
}

fn now_ms() -> u64 {
    SystemTime::now().duration_since(UNIX_EPOCH).map_or(0, |d| d.as_millis() as u64)
}

impl RunManifest {
    pub fn start(command: &str, workers: Option<usize>) -> Self {
        RunManifest {
            tool: env!("CARGO_PKG_NAME").to_string(),
            tool_version: env!("CARGO_PKG_VERSION").to_string(),
            command: command.to_string(),
            args: std::env::args().collect(),
            formats: FormatVersions::default(),
            workers,
            config: serde_json::Value::Null,
            master_seeds: Vec::new(),
            realizations: Vec::new(),
            inputs: Vec::new(),
            outputs: Vec::new(),
            started_unix_ms: now_ms(),
            finished_unix_ms: None,
            status: RunStatus::Running,
        }
    }

    pub fn set_config(&mut self, config: &impl Serialize) -> CliResult {
        self.config = serde_json::to_value(config)?;
        Ok(())
    }

    pub fn add_input(&mut self, path: &Path) -> CliResult {
        self.inputs.push(FileRecord::of(path, path.display().to_string())?);
        Ok(())
    }

    pub fn finish(&mut self, outputs: Vec<FileRecord>, error: Option<&CliError>) {
        self.outputs = outputs;
        self.finished_unix_ms = Some(now_ms());
        self.status = match error {
            None => RunStatus::Ok,
            Some(e) => RunStatus::Failed { exit_code: e.code(), message: e.to_string() },
        };
    }

    pub fn write(&self, dir: &Path) -> CliResult {
        std::fs::write(dir.join(MANIFEST_NAME), serde_json::to_string_pretty(self)? + "\n")?;
        Ok(())
    }

    pub fn read(path: &Path) -> CliResult<Self> {
        let text = std::fs::read_to_string(path)?;
        serde_json::from_str(&text)
            .map_err(|e| firesim_core::Error::Format { path: path.to_path_buf(), msg: e.to_string() }.into())
    }
}
