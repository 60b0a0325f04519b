//! Output directory bookkeeping and the run manifest.

use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{CliError, CliResult};

pub const MANIFEST_FILE: &str = "manifest.json";

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Artifact {
    /// Relative to the output directory.
    pub path: String,
    pub sha256: String,
    pub bytes: u64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Versions {
    pub dicke: String,
    pub dicke_cli: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub command: String,
    /// SHA-256 of the input file (config, records or density matrix).
    pub input_sha256: String,
    pub artifacts: Vec<Artifact>,
    pub versions: Versions,
    pub wall_time_s: f64,
}

/// Collects artifacts written to one output directory.
pub struct Output {
    dir: PathBuf,
    artifacts: Vec<Artifact>,
    started: Instant,
}

impl Output {
    pub fn create(dir: &Path) -> CliResult<Self> {
        std::fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
        Ok(Self {
            dir: dir.to_path_buf(),
            artifacts: Vec::new(),
            started: Instant::now(),
        })
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    pub fn write(&mut self, name: &str, bytes: &[u8]) -> CliResult<()> {
        let path = self.dir.join(name);
        std::fs::write(&path, bytes).map_err(|e| CliError::io(&path, e))?;
        self.artifacts.retain(|a| a.path != name);
        self.artifacts.push(Artifact {
            path: name.into(),
            sha256: sha256_hex(bytes),
            bytes: bytes.len() as u64,
        });
        Ok(())
    }

    pub fn artifacts(&self) -> &[Artifact] {
        &self.artifacts
    }

    /// Writes `manifest.json` and returns it.
    pub fn finish(self, command: &str, input: &[u8]) -> CliResult<RunManifest> {
        let manifest = RunManifest {
            command: command.into(),
            input_sha256: sha256_hex(input),
            artifacts: self.artifacts,
            versions: Versions {
                dicke: dicke::VERSION.into(),
                dicke_cli: env!("CARGO_PKG_VERSION").into(),
            },
            wall_time_s: self.started.elapsed().as_secs_f64(),
        };
        let path = self.dir.join(MANIFEST_FILE);
        std::fs::write(&path, crate::formats::json(&manifest)).map_err(|e| CliError::io(&path, e))?;
        Ok(manifest)
    }
}

/// Checks that every listed artifact exists, is non-empty and matches its hash.
pub fn verify(dir: &Path, manifest: &RunManifest) -> CliResult<()> {
    for a in &manifest.artifacts {
        let p = dir.join(&a.path);
        let bytes = std::fs::read(&p).map_err(|e| CliError::io(&p, e))?;
        if bytes.is_empty() || sha256_hex(&bytes) != a.sha256 {
            return Err(CliError::config(format!("artifact {} does not match the manifest", a.path)));
        }
    }
    Ok(())
}
