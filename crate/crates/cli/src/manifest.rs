use std::path::Path;

use chrono::{DateTime, SecondsFormat, Utc};
use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::error::{CliError, CliResult};

#[derive(Debug, Clone, Serialize)]
pub struct RunManifest {
    pub command: String,
    /// SHA-256 of the config in canonical form (sorted keys, compact).
    pub config_digest: String,
    pub version: String,
    pub started: String,
    pub finished: String,
    pub outputs: Vec<String>,
}

/// serde_json maps are ordered by key, so re-serialising a parsed document
/// gives the same bytes for any whitespace or key order in the file.
pub fn digest(config: &serde_json::Value) -> String {
    let canonical = serde_json::to_string(config).expect("JSON values always serialize");
    let hash = Sha256::digest(canonical.as_bytes());
    hash.iter().map(|b| format!("{b:02x}")).collect()
}

pub fn timestamp(t: DateTime<Utc>) -> String {
    t.to_rfc3339_opts(SecondsFormat::Millis, true)
}

impl RunManifest {
    pub fn write(&self, dir: &Path) -> CliResult<()> {
        let path = dir.join("manifest.json");
        let text = serde_json::to_string_pretty(self).expect("manifest serializes");
        std::fs::write(&path, text + "\n").map_err(|e| CliError::io(path, e))
    }
}
