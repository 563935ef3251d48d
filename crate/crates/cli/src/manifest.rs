//! Run manifest: configuration snapshot plus a digest of every output file.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

pub const MANIFEST_FILE: &str = "manifest.json";

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FileDigest {
    pub stage: String,
    /// Path relative to the output directory, `/`-separated.
    pub path: String,
    pub sha256: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RunManifest {
    pub toolkit: String,
    pub version: String,
    pub config: BTreeMap<String, String>,
    pub files: Vec<FileDigest>,
}

pub fn sha256_file(path: &Path) -> std::io::Result<String> {
    Ok(hex::encode(Sha256::digest(fs::read(path)?)))
}

fn relative(root: &Path, path: &Path) -> String {
    let rel = path.strip_prefix(root).unwrap_or(path);
    rel.components().map(|c| c.as_os_str().to_string_lossy()).collect::<Vec<_>>().join("/")
}

impl RunManifest {
    pub fn new(config: Vec<(String, String)>) -> Self {
        Self {
            toolkit: "trustdyn".to_string(),
            version: env!("CARGO_PKG_VERSION").to_string(),
            config: config.into_iter().collect(),
            files: Vec::new(),
        }
    }

    /// Record digests for a stage's files; entries stay sorted by path.
    pub fn record(&mut self, stage: &str, root: &Path, paths: &[std::path::PathBuf]) -> std::io::Result<()> {
        for p in paths {
            self.files.push(FileDigest { stage: stage.to_string(), path: relative(root, p), sha256: sha256_file(p)? });
        }
        self.files.sort_by(|a, b| a.path.cmp(&b.path));
        Ok(())
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("manifest serializes");
        s.push('\n');
        s
    }

    pub fn from_json(text: &str) -> serde_json::Result<Self> {
        serde_json::from_str(text)
    }

    /// Files whose current digest differs from the recorded one.
    pub fn verify(&self, root: &Path) -> Vec<String> {
        self.files
            .iter()
            .filter(|f| sha256_file(&root.join(&f.path)).ok().as_deref() != Some(f.sha256.as_str()))
            .map(|f| f.path.clone())
            .collect()
    }
}
