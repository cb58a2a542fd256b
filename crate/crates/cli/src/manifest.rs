//! Run manifests: the reproducibility envelope written next to every
//! command's outputs. Records the exact invocation, the effective
//! configuration, and SHA-256 digests of every emitted file; written
//! atomically at the end of the run.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use serde::Serialize;
use sha2::{Digest, Sha256};

#[derive(Serialize)]
pub struct RunManifest {
    pub command_line: Vec<String>,
    pub config: BTreeMap<String, String>,
    pub seed: Option<u64>,
    pub version: String,
    pub started_unix: f64,
    pub finished_unix: f64,
    /// Relative output path → SHA-256 hex digest.
    pub outputs: BTreeMap<String, String>,
}

fn now_unix() -> f64 {
    SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_secs_f64())
        .unwrap_or(0.0)
}

pub struct ManifestBuilder {
    manifest: RunManifest,
    out_dir: PathBuf,
}

impl ManifestBuilder {
    pub fn new(out_dir: &Path, config: BTreeMap<String, String>, seed: Option<u64>) -> Self {
        Self {
            manifest: RunManifest {
                command_line: std::env::args().collect(),
                config,
                seed,
                version: env!("CARGO_PKG_VERSION").to_string(),
                started_unix: now_unix(),
                finished_unix: 0.0,
                outputs: BTreeMap::new(),
            },
            out_dir: out_dir.to_path_buf(),
        }
    }

    /// Digest one emitted file (path relative to the output directory).
    pub fn record_output(&mut self, relative: &str) -> anyhow::Result<()> {
        let bytes = std::fs::read(self.out_dir.join(relative))?;
        let digest = Sha256::digest(&bytes);
        self.manifest
            .outputs
            .insert(relative.to_string(), hex_string(&digest));
        Ok(())
    }

    /// Finish and write `manifest.json` atomically (temp file + rename).
    pub fn write(mut self) -> anyhow::Result<()> {
        self.manifest.finished_unix = now_unix();
        let text = serde_json::to_string_pretty(&self.manifest)?;
        let tmp = self.out_dir.join("manifest.json.tmp");
        std::fs::write(&tmp, text)?;
        std::fs::rename(&tmp, self.out_dir.join("manifest.json"))?;
        Ok(())
    }
}

fn hex_string(bytes: &[u8]) -> String {
    bytes.iter().map(|b| format!("{b:02x}")).collect()
}

/// Digest an arbitrary file (used by tests and by `ckpt info`).
pub fn sha256_file(path: &Path) -> anyhow::Result<String> {
    Ok(hex_string(&Sha256::digest(std::fs::read(path)?)))
}
