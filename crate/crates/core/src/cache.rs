//! Content-addressed profile cache: flat JSON files keyed by the SHA-256 of
//! the dataset file's bytes. A cache hit requires an exact content match, so
//! edits to the source file always miss.

use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::data::MetaFeatureVector;
use crate::dims::RequirementVector;
use crate::error::{Error, Result};
use crate::stress::StressProfile;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProfileCacheEntry {
    pub content_hash: String,
    pub dataset: String,
    pub profile: StressProfile,
    pub requirements: RequirementVector,
    pub meta_features: MetaFeatureVector,
    pub hard_problem: bool,
    pub created_unix: u64,
}

#[derive(Debug, Clone)]
pub struct ProfileCache {
    dir: PathBuf,
}

impl ProfileCache {
    pub fn open(dir: impl Into<PathBuf>) -> Result<ProfileCache> {
        let dir = dir.into();
        std::fs::create_dir_all(&dir).map_err(|e| Error::io(dir.display().to_string(), e))?;
        Ok(ProfileCache { dir })
    }

    /// SHA-256 of the file's bytes, hex-encoded; this is the cache id.
    pub fn content_hash(path: &Path) -> Result<String> {
        let bytes = std::fs::read(path).map_err(|e| Error::io(path.display().to_string(), e))?;
        Ok(hash_bytes(&bytes))
    }

    fn entry_path(&self, hash: &str) -> PathBuf {
        self.dir.join(format!("{hash}.json"))
    }

    pub fn lookup(&self, hash: &str) -> Result<Option<ProfileCacheEntry>> {
        let path = self.entry_path(hash);
        if !path.exists() {
            return Ok(None);
        }
        let text =
            std::fs::read_to_string(&path).map_err(|e| Error::io(path.display().to_string(), e))?;
        let entry: ProfileCacheEntry = serde_json::from_str(&text)?;
        Ok(Some(entry))
    }

    pub fn store(&self, entry: &ProfileCacheEntry) -> Result<PathBuf> {
        let path = self.entry_path(&entry.content_hash);
        let text = serde_json::to_string_pretty(entry)?;
        std::fs::write(&path, text).map_err(|e| Error::io(path.display().to_string(), e))?;
        Ok(path)
    }
}

pub fn hash_bytes(bytes: &[u8]) -> String {
    let mut hasher = Sha256::new();
    hasher.update(bytes);
    let digest = hasher.finalize();
    digest.iter().map(|b| format!("{b:02x}")).collect()
}

pub fn now_unix() -> u64 {
    SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_secs())
        .unwrap_or(0)
}
