use std::collections::BTreeMap;
use std::path::Path;
use std::time::{SystemTime, UNIX_EPOCH};

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::error::{Error, Result};
use crate::io;

/// Completion record of one stage.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StageRecord {
    pub completed: bool,
    /// Hash of the stage parameters and input artifact hashes.
    pub key: String,
    pub started: u64,
    pub finished: Option<u64>,
    /// Run-directory-relative path → sha256.
    pub artifacts: BTreeMap<String, String>,
    pub summary: Value,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub run_id: String,
    pub created: u64,
    pub updated: u64,
    pub tool_version: String,
    pub config_sha256: String,
    /// Resolved configuration, fixed once the run directory exists.
    pub config: Value,
    pub stages: BTreeMap<String, StageRecord>,
}

pub(crate) fn now() -> u64 {
    SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0)
}

impl RunManifest {
    pub const FILE: &'static str = "manifest.json";

    pub fn new(config: Value) -> Result<Self> {
        let hash = io::sha256_hex(&serde_json::to_vec(&config)?);
        let t = now();
        Ok(Self {
            run_id: hash[..12].to_string(),
            created: t,
            updated: t,
            tool_version: env!("CARGO_PKG_VERSION").to_string(),
            config_sha256: hash,
            config,
            stages: BTreeMap::new(),
        })
    }

    pub fn load(dir: &Path) -> Result<Self> {
        io::read_json(dir.join(Self::FILE))
    }

    pub fn save(&mut self, dir: &Path) -> Result<()> {
        self.updated = now();
        io::write_json_atomic(dir.join(Self::FILE), self)
    }

    pub fn completed(&self, stage: &str) -> Option<&StageRecord> {
        self.stages.get(stage).filter(|r| r.completed)
    }

    /// Re-hash every artifact of a record.
    pub fn verify(dir: &Path, record: &StageRecord) -> Result<()> {
        for (rel, expected) in &record.artifacts {
            let path = dir.join(rel);
            let actual = match io::sha256_file(&path) {
                Ok(h) => h,
                Err(Error::Io(_)) => "missing".to_string(),
                Err(e) => return Err(e),
            };
            if &actual != expected {
                return Err(Error::HashMismatch { path, expected: expected.clone(), actual });
            }
        }
        Ok(())
    }
}
