//! Per-run reproducibility record.

use std::path::{Path, PathBuf};
use std::time::Instant;

use anyhow::{Context, Result};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

/// First 8 bytes of SHA-256, as 16 hex digits.
pub fn digest_bytes(bytes: &[u8]) -> String {
    let hash = Sha256::digest(bytes);
    hash[..8].iter().map(|b| format!("{b:02x}")).collect()
}

pub fn digest_file(path: &Path) -> Result<String> {
    let bytes = std::fs::read(path).with_context(|| format!("reading {} for digest", path.display()))?;
    Ok(digest_bytes(&bytes))
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FileDigest {
    pub path: String,
    pub digest: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub tool: String,
    pub version: String,
    pub command: Vec<String>,
    pub config_files: Vec<String>,
    pub inputs: Vec<FileDigest>,
    /// Paths relative to the manifest's directory when inside it.
    pub outputs: Vec<FileDigest>,
    /// Stages finished so far, in order.
    pub stages: Vec<String>,
    pub complete: bool,
    pub duration_ms: u64,
}

/// Collects inputs and outputs during a run and rewrites the manifest file on
/// every checkpoint, so an interrupted run keeps a record of what it finished.
pub struct ManifestWriter {
    path: PathBuf,
    base: PathBuf,
    started: Instant,
    manifest: RunManifest,
}

impl ManifestWriter {
    pub fn new(path: impl Into<PathBuf>, command: Vec<String>) -> Self {
        let path = path.into();
        let base = path.parent().map(Path::to_path_buf).unwrap_or_default();
        Self {
            path,
            base,
            started: Instant::now(),
            manifest: RunManifest {
                tool: env!("CARGO_PKG_NAME").into(),
                version: env!("CARGO_PKG_VERSION").into(),
                command,
                config_files: Vec::new(),
                inputs: Vec::new(),
                outputs: Vec::new(),
                stages: Vec::new(),
                complete: false,
                duration_ms: 0,
            },
        }
    }

    pub fn path(&self) -> &Path {
        &self.path
    }

    pub fn config(&mut self, path: &Path) -> Result<()> {
        self.manifest.config_files.push(path.display().to_string());
        self.input(path)
    }

    pub fn input(&mut self, path: &Path) -> Result<()> {
        let digest = digest_file(path)?;
        self.manifest.inputs.push(FileDigest {
            path: path.display().to_string(),
            digest,
        });
        Ok(())
    }

    pub fn output(&mut self, path: &Path) -> Result<()> {
        let digest = digest_file(path)?;
        let shown = path.strip_prefix(&self.base).unwrap_or(path);
        self.manifest.outputs.push(FileDigest {
            path: shown.display().to_string(),
            digest,
        });
        Ok(())
    }

    /// Records a finished stage and rewrites the manifest.
    pub fn checkpoint(&mut self, stage: &str) -> Result<()> {
        self.manifest.stages.push(stage.into());
        self.write()
    }

    pub fn finish(mut self) -> Result<RunManifest> {
        self.manifest.complete = true;
        self.write()?;
        Ok(self.manifest)
    }

    fn write(&mut self) -> Result<()> {
        self.manifest.duration_ms = self.started.elapsed().as_millis() as u64;
        let text = serde_json::to_string_pretty(&self.manifest)?;
        std::fs::write(&self.path, text + "\n").with_context(|| format!("writing {}", self.path.display()))
    }
}

/// `<file>.manifest.json` next to a single-file output.
pub fn manifest_for_file(out: &Path) -> PathBuf {
    let mut name = out.file_name().map(|n| n.to_os_string()).unwrap_or_default();
    name.push(".manifest.json");
    out.with_file_name(name)
}
