use std::collections::BTreeMap;
use std::path::Path;

use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::io::ArtifactError;

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct InputDigest {
    pub path: String,
    pub sha256: String,
}

impl InputDigest {
    pub fn of_file(path: &Path) -> Result<Self, ArtifactError> {
        let bytes = std::fs::read(path).map_err(|e| ArtifactError::io(path, e))?;
        Ok(InputDigest {
            path: path.display().to_string(),
            sha256: sha256_hex(&bytes),
        })
    }
}

/// Where a report's numbers came from: input digests, the effective flags,
/// and a hash over both.
#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct Provenance {
    pub inputs: Vec<InputDigest>,
    pub flags: BTreeMap<String, String>,
    pub tool_version: String,
    /// Seconds since the Unix epoch; only set on request so that reports
    /// stay byte-reproducible by default.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub generated_at: Option<u64>,
}

impl Provenance {
    pub fn new(inputs: Vec<InputDigest>, flags: BTreeMap<String, String>) -> Self {
        Provenance {
            inputs,
            flags,
            tool_version: env!("CARGO_PKG_VERSION").to_string(),
            generated_at: None,
        }
    }

    /// SHA-256 over the flags and input digests. Paths and timestamps are
    /// excluded, so moving inputs around does not change it.
    pub fn config_hash(&self) -> String {
        let mut h = Sha256::new();
        for (k, v) in &self.flags {
            h.update(k.as_bytes());
            h.update([0]);
            h.update(v.as_bytes());
            h.update([0]);
        }
        for i in &self.inputs {
            h.update(i.sha256.as_bytes());
            h.update([0]);
        }
        h.update(self.tool_version.as_bytes());
        hex::encode(h.finalize())
    }

    pub fn to_json(&self) -> serde_json::Value {
        let mut v = serde_json::to_value(self).expect("provenance serializes");
        v.as_object_mut()
            .expect("object")
            .insert("config_hash".into(), self.config_hash().into());
        v
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hash_is_stable_and_sensitive() {
        let mut flags = BTreeMap::new();
        flags.insert("iou".to_string(), "0.5".to_string());
        let a = Provenance::new(vec![], flags.clone());
        let b = Provenance::new(vec![], flags.clone());
        assert_eq!(a.config_hash(), b.config_hash());
        assert_eq!(a.config_hash().len(), 64);
        flags.insert("iou".to_string(), "0.6".to_string());
        assert_ne!(a.config_hash(), Provenance::new(vec![], flags).config_hash());
        assert_eq!(
            sha256_hex(b"abc"),
            "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad"
        );
    }
}
