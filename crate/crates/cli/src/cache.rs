//! On-disk result cache: one JSON record per key, written to a temporary
//! file and renamed into place.

use std::fs;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::output::Rendered;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CacheRecord {
    pub key: String,
    pub artifact_version: String,
    /// Seconds since the Unix epoch.
    pub created_at: u64,
    pub payload: Rendered,
}

/// Hex SHA-256 of the artifact version, the subcommand and the canonical
/// result-affecting configuration.
pub fn cache_key(artifact_version: &str, command: &str, result_text: &str) -> String {
    let mut h = Sha256::new();
    h.update(artifact_version.as_bytes());
    h.update(b"\n");
    h.update(command.as_bytes());
    h.update(b"\n");
    h.update(result_text.as_bytes());
    hex::encode(h.finalize())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Lookup {
    Hit,
    Miss,
    /// A record existed but could not be used; it will be overwritten.
    Corrupt,
}

pub struct Cache {
    dir: PathBuf,
    version: String,
}

impl Cache {
    pub fn new(dir: PathBuf, version: &str) -> Self {
        Self {
            dir,
            version: version.to_string(),
        }
    }

    fn path(&self, key: &str) -> PathBuf {
        self.dir.join(format!("{key}.json"))
    }

    /// Payload stored under exactly `key` with the current version.
    pub fn load(&self, key: &str) -> (Lookup, Option<Rendered>) {
        let Ok(text) = fs::read_to_string(self.path(key)) else {
            return (Lookup::Miss, None);
        };
        match serde_json::from_str::<CacheRecord>(&text) {
            Ok(r) if r.key == key && r.artifact_version == self.version => (Lookup::Hit, Some(r.payload)),
            _ => (Lookup::Corrupt, None),
        }
    }

    /// Persist atomically. Failures are returned for the caller to report;
    /// they never lose the computed result.
    pub fn store(&self, key: &str, payload: &Rendered) -> std::io::Result<()> {
        fs::create_dir_all(&self.dir)?;
        let record = CacheRecord {
            key: key.to_string(),
            artifact_version: self.version.clone(),
            created_at: SystemTime::now().duration_since(UNIX_EPOCH).map_or(0, |d| d.as_secs()),
            payload: payload.clone(),
        };
        let text = serde_json::to_string_pretty(&record).map_err(std::io::Error::other)?;
        let tmp = self.dir.join(format!(".{key}.{}.tmp", std::process::id()));
        fs::write(&tmp, text)?;
        fs::rename(&tmp, self.path(key)).inspect_err(|_| {
            let _ = fs::remove_file(&tmp);
        })
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }
}
