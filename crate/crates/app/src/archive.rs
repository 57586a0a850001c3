use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};
use siot_core::config::DiscoveryConfig;
use siot_core::discovery::DiscoveryIndex;

use crate::pipeline::BuildParams;
use crate::stats::BuildStats;

pub const ARCHIVE_SCHEMA_VERSION: u32 = 1;

#[derive(Debug, thiserror::Error)]
pub enum ArchiveError {
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: malformed archive: {source}")]
    Format {
        path: String,
        #[source]
        source: serde_json::Error,
    },
    #[error("{path}: archive schema version {found} is not supported (expected {ARCHIVE_SCHEMA_VERSION})")]
    Version { path: String, found: u64 },
}

/// Everything `query`, `stats` and `serve` need, as one JSON document.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IndexArchive {
    pub schema_version: u32,
    /// Seconds since the Unix epoch; the only field that varies between identical builds.
    pub created_at: u64,
    pub params: BuildParams,
    /// SHA-256 of each input, keyed by role.
    pub digests: BTreeMap<String, String>,
    pub config: DiscoveryConfig,
    pub index: DiscoveryIndex,
    pub stats: BuildStats,
}

impl IndexArchive {
    pub fn to_json(&self) -> String {
        let mut text = serde_json::to_string_pretty(self).expect("archive serializes");
        text.push('\n');
        text
    }

    pub fn from_json(text: &str, path: &str) -> Result<Self, ArchiveError> {
        let format = |source| ArchiveError::Format {
            path: path.to_string(),
            source,
        };
        let value: serde_json::Value = serde_json::from_str(text).map_err(format)?;
        let found = value.get("schema_version").and_then(serde_json::Value::as_u64).unwrap_or(0);
        if found != u64::from(ARCHIVE_SCHEMA_VERSION) {
            return Err(ArchiveError::Version {
                path: path.to_string(),
                found,
            });
        }
        serde_json::from_value(value).map_err(format)
    }

    pub fn save(&self, path: &Path) -> Result<(), ArchiveError> {
        std::fs::write(path, self.to_json()).map_err(|source| ArchiveError::Io {
            path: path.display().to_string(),
            source,
        })
    }

    pub fn load(path: &Path) -> Result<Self, ArchiveError> {
        let text = std::fs::read_to_string(path).map_err(|source| ArchiveError::Io {
            path: path.display().to_string(),
            source,
        })?;
        Self::from_json(&text, &path.display().to_string())
    }
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    use sha2::{Digest, Sha256};
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}
