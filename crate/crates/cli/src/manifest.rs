//! Run manifest: config hash, tool version, timings, and a checksummed
//! inventory of every emitted file.

use serde::Serialize;
use sha2::{Digest, Sha256};
use std::path::{Path, PathBuf};
use std::time::{Instant, SystemTime, UNIX_EPOCH};

#[derive(Debug, Serialize)]
pub struct RunManifest {
    pub tool: String,
    pub version: String,
    pub subcommand: String,
    pub config_sha256: String,
    pub seed: Option<u64>,
    pub started_unix_s: u64,
    pub finished_unix_s: u64,
    pub stages: Vec<StageTime>,
    pub outputs: Vec<OutputRecord>,
}

#[derive(Debug, Serialize)]
pub struct StageTime {
    pub name: String,
    pub seconds: f64,
}

#[derive(Debug, Serialize)]
pub struct OutputRecord {
    pub path: String,
    pub sha256: String,
    pub bytes: u64,
}

pub fn sha256_hex(data: &[u8]) -> String {
    let mut hasher = Sha256::new();
    hasher.update(data);
    let digest = hasher.finalize();
    digest.iter().map(|b| format!("{b:02x}")).collect()
}

fn unix_now() -> u64 {
    SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_secs())
        .unwrap_or(0)
}

/// Collects written files and stage timings, then serializes the manifest.
pub struct ManifestBuilder {
    subcommand: String,
    config_sha256: String,
    seed: Option<u64>,
    started_unix: u64,
    started: Instant,
    stage_start: Instant,
    stages: Vec<StageTime>,
    outputs: Vec<OutputRecord>,
    out_dir: PathBuf,
}

impl ManifestBuilder {
    pub fn new(subcommand: &str, config_text: &str, seed: Option<u64>, out_dir: &Path) -> Self {
        Self {
            subcommand: subcommand.to_string(),
            config_sha256: sha256_hex(config_text.as_bytes()),
            seed,
            started_unix: unix_now(),
            started: Instant::now(),
            stage_start: Instant::now(),
            stages: Vec::new(),
            outputs: Vec::new(),
            out_dir: out_dir.to_path_buf(),
        }
    }

    /// Close the current stage under `name`.
    pub fn stage(&mut self, name: &str) {
        self.stages.push(StageTime {
            name: name.to_string(),
            seconds: self.stage_start.elapsed().as_secs_f64(),
        });
        self.stage_start = Instant::now();
    }

    /// Write a file under the output directory and record its checksum.
    pub fn write_file(&mut self, name: &str, contents: &[u8]) -> std::io::Result<PathBuf> {
        std::fs::create_dir_all(&self.out_dir)?;
        let path = self.out_dir.join(name);
        std::fs::write(&path, contents)?;
        self.outputs.push(OutputRecord {
            path: name.to_string(),
            sha256: sha256_hex(contents),
            bytes: contents.len() as u64,
        });
        Ok(path)
    }

    pub fn finish(mut self) -> std::io::Result<PathBuf> {
        self.stages.push(StageTime {
            name: "total".into(),
            seconds: self.started.elapsed().as_secs_f64(),
        });
        let manifest = RunManifest {
            tool: "pulsegate".into(),
            version: env!("CARGO_PKG_VERSION").into(),
            subcommand: self.subcommand,
            config_sha256: self.config_sha256,
            seed: self.seed,
            started_unix_s: self.started_unix,
            finished_unix_s: unix_now(),
            stages: self.stages,
            outputs: self.outputs,
        };
        let text = serde_json::to_string_pretty(&manifest).expect("manifest serializes");
        std::fs::create_dir_all(&self.out_dir)?;
        let path = self.out_dir.join("manifest.json");
        std::fs::write(&path, text)?;
        Ok(path)
    }
}
