//! Provenance stamps and JSON report plumbing shared by all stages.

use std::path::Path;
use std::time::{SystemTime, UNIX_EPOCH};

use ahc_core::spectral::RunStamp;
use ahc_core::error::Result;
use ahc_core::AhcError;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

/// Version string stamped into every artifact.
pub const CODE_VERSION: &str = env!("CARGO_PKG_VERSION");

/// Hex SHA-256 of the configuration text exactly as loaded.
pub fn config_digest(text: &str) -> String {
    hex(&Sha256::digest(text.as_bytes()))
}

/// Hex SHA-256 of a file's bytes.
pub fn file_digest(path: &Path) -> Result<String> {
    Ok(hex(&Sha256::digest(std::fs::read(path)?)))
}

fn hex(bytes: &[u8]) -> String {
    let mut out = String::with_capacity(bytes.len() * 2);
    for b in bytes {
        out.push_str(&format!("{b:02x}"));
    }
    out
}

/// Who produced a report: code version, config hash, effective seed, and an
/// optional wall-clock stamp that reproducible runs omit.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Provenance {
    pub code_version: String,
    pub config_digest: String,
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub generated_unix_s: Option<u64>,
}

impl Provenance {
    pub fn new(config_text: &str, seed: u64, with_timestamp: bool) -> Self {
        let generated_unix_s = with_timestamp.then(|| {
            SystemTime::now()
                .duration_since(UNIX_EPOCH)
                .map(|d| d.as_secs())
                .unwrap_or(0)
        });
        Provenance {
            code_version: CODE_VERSION.to_string(),
            config_digest: config_digest(config_text),
            seed,
            generated_unix_s,
        }
    }

    pub fn stamp(&self) -> RunStamp {
        RunStamp {
            config_digest: self.config_digest.clone(),
            code_version: self.code_version.clone(),
        }
    }
}

/// A file a stage wrote, with its content hash.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ArtifactEntry {
    pub file: String,
    pub sha256: String,
}

/// Pretty-print a serializable value to a file with a trailing newline.
pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)
        .map_err(|e| AhcError::parse(format!("serializing report: {e}"), None))?;
    text.push('\n');
    std::fs::write(path, text)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn digest_is_stable_hex() {
        let d = config_digest("abc");
        assert_eq!(d.len(), 64);
        assert_eq!(
            d,
            "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad"
        );
    }

    #[test]
    fn timestamp_is_omitted_on_request() {
        let p = Provenance::new("{}", 9, false);
        assert!(p.generated_unix_s.is_none());
        let text = serde_json::to_string(&p).unwrap();
        assert!(!text.contains("generated_unix_s"));
    }
}
