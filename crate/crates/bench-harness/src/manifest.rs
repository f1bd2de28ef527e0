//! Run manifests: what was run and a content hash for every emitted file.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{HarnessError, Result};

pub const FORMAT_VERSION: u32 = 1;
pub const MANIFEST_FILE: &str = "manifest.json";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FileEntry {
    pub path: String,
    pub bytes: u64,
    pub sha256: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Environment {
    pub package_version: String,
    pub os: String,
    pub arch: String,
}

impl Environment {
    pub fn current() -> Self {
        Self {
            package_version: env!("CARGO_PKG_VERSION").into(),
            os: std::env::consts::OS.into(),
            arch: std::env::consts::ARCH.into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub format_version: u32,
    pub command: String,
    /// Paths below are relative to the directory holding the manifest.
    pub output_dir: String,
    pub base_seed: u64,
    pub seeds: Vec<u64>,
    pub config: serde_json::Value,
    pub environment: Environment,
    pub failures: Vec<String>,
    pub files: Vec<FileEntry>,
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

fn collect(root: &Path, dir: &Path, out: &mut Vec<FileEntry>) -> Result<()> {
    let mut entries: Vec<_> = fs::read_dir(dir)?.collect::<std::io::Result<_>>()?;
    entries.sort_by_key(|e| e.file_name());
    for e in entries {
        let path = e.path();
        if path.is_dir() {
            collect(root, &path, out)?;
            continue;
        }
        let rel = path.strip_prefix(root).expect("inside root").to_string_lossy().replace('\\', "/");
        if rel == MANIFEST_FILE {
            continue;
        }
        let bytes = fs::read(&path)?;
        out.push(FileEntry { path: rel, bytes: bytes.len() as u64, sha256: sha256_hex(&bytes) });
    }
    Ok(())
}

/// Hashes every file under `dir` except the manifest itself, in path order.
pub fn hash_tree(dir: &Path) -> Result<Vec<FileEntry>> {
    let mut out = Vec::new();
    collect(dir, dir, &mut out)?;
    out.sort_by(|a, b| a.path.cmp(&b.path));
    Ok(out)
}

impl RunManifest {
    pub fn new(
        command: &str,
        base_seed: u64,
        seeds: Vec<u64>,
        config: serde_json::Value,
        failures: Vec<String>,
    ) -> Self {
        Self {
            format_version: FORMAT_VERSION,
            command: command.into(),
            output_dir: ".".into(),
            base_seed,
            seeds,
            config,
            environment: Environment::current(),
            failures,
            files: Vec::new(),
        }
    }

    /// Hashes the files currently in `dir` and writes the manifest there.
    pub fn write(mut self, dir: &Path) -> Result<Self> {
        self.files = hash_tree(dir)?;
        fs::write(dir.join(MANIFEST_FILE), serde_json::to_string_pretty(&self)? + "\n")?;
        Ok(self)
    }

    pub fn load(dir: &Path) -> Result<Self> {
        Ok(serde_json::from_str(&fs::read_to_string(dir.join(MANIFEST_FILE))?)?)
    }
}

/// Checks that the files under `dir` are exactly those listed, with matching hashes.
pub fn validate_manifest(dir: &Path) -> Result<RunManifest> {
    let m = RunManifest::load(dir)?;
    let actual = hash_tree(dir)?;
    if actual != m.files {
        let listed: Vec<&str> = m.files.iter().map(|f| f.path.as_str()).collect();
        for f in &actual {
            match m.files.iter().find(|g| g.path == f.path) {
                None => return Err(HarnessError::Manifest(format!("unlisted file {}", f.path))),
                Some(g) if g.sha256 != f.sha256 => {
                    return Err(HarnessError::Manifest(format!("hash mismatch for {}", f.path)))
                }
                _ => {}
            }
        }
        return Err(HarnessError::Manifest(format!("missing files among {listed:?}")));
    }
    Ok(m)
}
