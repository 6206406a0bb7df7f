//! Experiment manifests: enough to re-run any command bit-identically.

use std::fs;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use serde::{Deserialize, Serialize};

use crate::error::{CliError, CliResult};

pub const MANIFEST_SCHEMA: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OutputFile {
    /// Relative to the command's output root.
    pub path: String,
    pub bytes: u64,
    /// FNV-1a 64 of the file content, hex.
    pub fnv1a: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentManifest {
    pub schema_version: u32,
    pub command: String,
    /// Arguments after the program name; `rerun` replays exactly these.
    pub argv: Vec<String>,
    pub parameters: serde_json::Value,
    pub seeds: Vec<u64>,
    pub code_version: String,
    pub started_unix: f64,
    pub finished_unix: f64,
    pub outputs: Vec<OutputFile>,
}

pub fn now_unix() -> f64 {
    SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs_f64()).unwrap_or(0.0)
}

pub fn fnv1a(bytes: &[u8]) -> String {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for b in bytes {
        h ^= *b as u64;
        h = h.wrapping_mul(0x0100_0000_01b3);
    }
    format!("{h:016x}")
}

/// Records the files a command writes and emits the manifest at the end.
pub struct Recorder {
    pub root: PathBuf,
    pub manifest_path: PathBuf,
    manifest: ExperimentManifest,
}

impl Recorder {
    pub fn new(root: PathBuf, manifest_path: PathBuf, command: &str, argv: &[String], parameters: serde_json::Value, seeds: Vec<u64>) -> Self {
        Recorder {
            root,
            manifest_path,
            manifest: ExperimentManifest {
                schema_version: MANIFEST_SCHEMA,
                command: command.to_string(),
                argv: argv.to_vec(),
                parameters,
                seeds,
                code_version: env!("CARGO_PKG_VERSION").to_string(),
                started_unix: now_unix(),
                finished_unix: 0.0,
                outputs: Vec::new(),
            },
        }
    }

    pub fn write(&mut self, path: &Path, content: &[u8]) -> CliResult<()> {
        if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
            fs::create_dir_all(parent).map_err(|e| CliError::io(parent, e))?;
        }
        fs::write(path, content).map_err(|e| CliError::io(path, e))?;
        self.note(path, content);
        Ok(())
    }

    /// Register a file written by other means.
    pub fn note(&mut self, path: &Path, content: &[u8]) {
        let rel = path.strip_prefix(&self.root).unwrap_or(path);
        self.manifest.outputs.push(OutputFile {
            path: rel.display().to_string(),
            bytes: content.len() as u64,
            fnv1a: fnv1a(content),
        });
    }

    pub fn finish(mut self) -> CliResult<ExperimentManifest> {
        self.manifest.finished_unix = now_unix();
        let text = serde_json::to_string_pretty(&self.manifest).expect("manifest serializes");
        if let Some(parent) = self.manifest_path.parent().filter(|p| !p.as_os_str().is_empty()) {
            fs::create_dir_all(parent).map_err(|e| CliError::io(parent, e))?;
        }
        fs::write(&self.manifest_path, text).map_err(|e| CliError::io(&self.manifest_path, e))?;
        Ok(self.manifest)
    }
}

pub fn load_manifest(path: &Path) -> CliResult<ExperimentManifest> {
    let text = fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    serde_json::from_str(&text).map_err(|e| CliError::Io(format!("{}: bad manifest: {e}", path.display())))
}
