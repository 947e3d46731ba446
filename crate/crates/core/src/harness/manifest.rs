use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::config::Stage;
use super::HarnessError;

pub const MANIFEST_FILE: &str = "manifest.json";

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

/// A file read or written by a stage. Paths inside the output directory are
/// stored relative to it; other paths as configured.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FileRecord {
    pub path: String,
    pub sha256: String,
    pub bytes: u64,
}

impl FileRecord {
    pub fn of_file(path: &Path, recorded_as: String) -> Result<Self, HarnessError> {
        let bytes = fs::read(path).map_err(|e| HarnessError::io(path, e))?;
        Ok(Self { path: recorded_as, sha256: sha256_hex(&bytes), bytes: bytes.len() as u64 })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StageStatus {
    Ok,
    Failed,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StageRecord {
    pub stage: Stage,
    pub status: StageStatus,
    pub wall_ms: u64,
    pub inputs: Vec<FileRecord>,
    pub artifacts: Vec<FileRecord>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub schema_version: u32,
    pub config_hash: String,
    pub seed: u64,
    pub versions: BTreeMap<String, String>,
    pub stages: Vec<StageRecord>,
}

impl RunManifest {
    pub fn new(config_hash: String, seed: u64) -> Self {
        let mut versions = BTreeMap::new();
        versions.insert("polilab".into(), env!("CARGO_PKG_VERSION").into());
        versions.insert("data_schema".into(), crate::data::SCHEMA_VERSION.to_string());
        Self { schema_version: 1, config_hash, seed, versions, stages: Vec::new() }
    }

    pub fn read(dir: &Path) -> Result<Self, HarnessError> {
        let path = dir.join(MANIFEST_FILE);
        let text = fs::read_to_string(&path).map_err(|e| HarnessError::io(&path, e))?;
        serde_json::from_str(&text).map_err(|e| HarnessError::Integrity {
            path: MANIFEST_FILE.into(),
            message: format!("unreadable manifest: {e}"),
        })
    }

    pub fn write(&self, dir: &Path) -> Result<(), HarnessError> {
        let path = dir.join(MANIFEST_FILE);
        let mut text = serde_json::to_string_pretty(self).expect("manifest serializes");
        text.push('\n');
        fs::write(&path, text).map_err(|e| HarnessError::io(&path, e))
    }

    /// Replaces any earlier record of the same stage.
    pub fn record(&mut self, rec: StageRecord) {
        self.stages.retain(|s| s.stage != rec.stage);
        self.stages.push(rec);
    }

    pub fn failed_stage(&self) -> Option<Stage> {
        self.stages.iter().find(|s| s.status == StageStatus::Failed).map(|s| s.stage)
    }

    /// Record of artifact `name` from a successful stage.
    pub fn artifact(&self, name: &str) -> Option<&FileRecord> {
        self.stages
            .iter()
            .filter(|s| s.status == StageStatus::Ok)
            .flat_map(|s| &s.artifacts)
            .find(|a| a.path == name)
    }

    /// Every artifact path mapped to its SHA-256.
    pub fn checksums(&self) -> BTreeMap<String, String> {
        self.stages.iter().flat_map(|s| &s.artifacts).map(|a| (a.path.clone(), a.sha256.clone())).collect()
    }

    /// Re-hashes every recorded artifact under `dir`.
    pub fn verify(&self, dir: &Path) -> Result<(), HarnessError> {
        for a in self.stages.iter().flat_map(|s| &s.artifacts) {
            let bytes = fs::read(dir.join(&a.path)).map_err(|e| HarnessError::Integrity {
                path: a.path.clone(),
                message: format!("cannot read artifact: {e}"),
            })?;
            let sum = sha256_hex(&bytes);
            if sum != a.sha256 || bytes.len() as u64 != a.bytes {
                return Err(HarnessError::Integrity {
                    path: a.path.clone(),
                    message: format!("checksum {sum} does not match recorded {}", a.sha256),
                });
            }
        }
        Ok(())
    }
}
