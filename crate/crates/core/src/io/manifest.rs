//! `manifest.json`: provenance and checksums of the files in an output directory.

use std::collections::BTreeMap;
use std::path::Path;
use std::time::{SystemTime, UNIX_EPOCH};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use time::format_description::well_known::Rfc3339;
use time::OffsetDateTime;

use crate::error::{Error, Result};

pub const MANIFEST_FILE: &str = "manifest.json";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub tool_version: String,
    pub command_line: String,
    pub seed: u64,
    pub scenarios: Vec<String>,
    pub started: String,
    pub finished: String,
    /// SHA-256 of every emitted file, keyed by path relative to the manifest.
    pub outputs: BTreeMap<String, String>,
}

/// Current UTC time in RFC 3339, or `SOURCE_DATE_EPOCH` when it is set.
pub fn timestamp() -> String {
    let secs = std::env::var("SOURCE_DATE_EPOCH")
        .ok()
        .and_then(|v| v.trim().parse::<i64>().ok())
        .unwrap_or_else(|| {
            SystemTime::now()
                .duration_since(UNIX_EPOCH)
                .map_or(0, |d| d.as_secs() as i64)
        });
    OffsetDateTime::from_unix_timestamp(secs)
        .ok()
        .and_then(|t| t.format(&Rfc3339).ok())
        .unwrap_or_else(|| secs.to_string())
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes)
        .iter()
        .map(|b| format!("{b:02x}"))
        .collect()
}

pub fn file_checksum(path: &Path) -> Result<String> {
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    Ok(sha256_hex(&bytes))
}

impl RunManifest {
    pub fn new(command_line: String, seed: u64, scenarios: Vec<String>, started: String) -> Self {
        RunManifest {
            tool_version: env!("CARGO_PKG_VERSION").to_string(),
            command_line,
            seed,
            scenarios,
            started,
            finished: String::new(),
            outputs: BTreeMap::new(),
        }
    }

    /// Records the checksum of `dir/relative`.
    pub fn add_output(&mut self, dir: &Path, relative: &str) -> Result<()> {
        let sum = file_checksum(&dir.join(relative))?;
        self.outputs.insert(relative.to_string(), sum);
        Ok(())
    }

    /// Keeps checksums from an earlier manifest in the same directory for
    /// files this run did not rewrite and that still exist.
    pub fn merge_previous(&mut self, dir: &Path) {
        let Ok(previous) = read_manifest(dir) else {
            return;
        };
        for (file, sum) in previous.outputs {
            if !self.outputs.contains_key(&file) && dir.join(&file).is_file() {
                self.outputs.insert(file, sum);
            }
        }
    }

    /// Files whose current checksum differs from the recorded one.
    pub fn verify(&self, dir: &Path) -> Vec<String> {
        self.outputs
            .iter()
            .filter(|(file, sum)| file_checksum(&dir.join(file)).ok().as_ref() != Some(*sum))
            .map(|(file, _)| file.clone())
            .collect()
    }

    pub fn write(&mut self, dir: &Path) -> Result<()> {
        self.finished = timestamp();
        let path = dir.join(MANIFEST_FILE);
        let mut text = serde_json::to_string_pretty(self)?;
        text.push('\n');
        std::fs::write(&path, text).map_err(|e| Error::io(&path, e))
    }
}

pub fn read_manifest(dir: &Path) -> Result<RunManifest> {
    let path = dir.join(MANIFEST_FILE);
    let file = std::fs::File::open(&path).map_err(|e| Error::io(&path, e))?;
    Ok(serde_json::from_reader(file)?)
}
