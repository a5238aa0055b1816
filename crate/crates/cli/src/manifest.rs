//! Run manifests: what was run, on which inputs, with which settings.

use std::path::Path;
use std::time::{SystemTime, UNIX_EPOCH};

use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::CliError;

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct InputDigest {
    pub path: String,
    pub sha256: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct RunManifest {
    pub command: String,
    pub inputs: Vec<InputDigest>,
    /// SHA-256 of the canonical JSON form of the run settings, output
    /// locations excluded.
    pub config_digest: String,
    pub seed: Option<u64>,
    pub tool_version: String,
    /// Unix seconds; `SOURCE_DATE_EPOCH` takes precedence over the clock.
    pub started_at: u64,
    pub finished_at: u64,
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

/// Current time in Unix seconds, or `SOURCE_DATE_EPOCH` when set.
pub fn timestamp() -> u64 {
    if let Some(t) = std::env::var("SOURCE_DATE_EPOCH").ok().and_then(|v| v.trim().parse().ok()) {
        return t;
    }
    SystemTime::now().duration_since(UNIX_EPOCH).map_or(0, |d| d.as_secs())
}

impl RunManifest {
    pub fn start<C: Serialize>(command: &str, inputs: &[&Path], config: &C, seed: Option<u64>) -> Result<Self, CliError> {
        let inputs = inputs
            .iter()
            .map(|p| {
                Ok(InputDigest {
                    path: p.display().to_string(),
                    sha256: sha256_hex(&crate::read_file(p)?),
                })
            })
            .collect::<Result<Vec<_>, CliError>>()?;
        let canonical = serde_json::to_vec(config).map_err(|e| CliError::Config(e.to_string()))?;
        let now = timestamp();
        Ok(RunManifest {
            command: command.to_string(),
            inputs,
            config_digest: sha256_hex(&canonical),
            seed,
            tool_version: env!("CARGO_PKG_VERSION").to_string(),
            started_at: now,
            finished_at: now,
        })
    }

    pub fn finish(mut self) -> Self {
        self.finished_at = timestamp();
        self
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("manifest serialization");
        s.push('\n');
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn digest_of_empty_input() {
        assert_eq!(
            sha256_hex(b""),
            "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855"
        );
        assert_ne!(sha256_hex(b"a"), sha256_hex(b"b"));
    }
}
