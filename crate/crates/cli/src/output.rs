use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use anyhow::Context;
use restorex_core::report::{to_json_text, InputDigest, Provenance};

pub struct Output {
    pub quiet: bool,
    pub json_only: bool,
    pub timestamp: bool,
}

impl Output {
    /// Human-readable line on stdout, unless quiet or JSON-only.
    pub fn say(&self, line: impl AsRef<str>) {
        if !self.quiet && !self.json_only {
            println!("{}", line.as_ref());
        }
    }

    /// Writes `doc` to `path` if given. The document also goes to stdout
    /// when there is no path or stdout is reserved for JSON.
    pub fn emit(&self, doc: &serde_json::Value, path: Option<&Path>) -> anyhow::Result<()> {
        let text = to_json_text(doc);
        if let Some(p) = path {
            write_file(p, text.as_bytes())?;
        }
        if path.is_none() || self.json_only {
            print!("{text}");
        }
        Ok(())
    }

    pub fn provenance(&self, inputs: &[&Path], flags: BTreeMap<String, String>) -> anyhow::Result<Provenance> {
        let digests = inputs
            .iter()
            .map(|p| InputDigest::of_file(p))
            .collect::<Result<Vec<_>, _>>()?;
        let mut prov = Provenance::new(digests, flags);
        if self.timestamp {
            prov.generated_at = Some(SystemTime::now().duration_since(UNIX_EPOCH)?.as_secs());
        }
        Ok(prov)
    }
}

pub fn write_file(path: &Path, bytes: &[u8]) -> anyhow::Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    }
    std::fs::write(path, bytes).with_context(|| format!("writing {}", path.display()))
}

/// `key=value` pairs for provenance.
pub fn flags<const N: usize>(pairs: [(&str, String); N]) -> BTreeMap<String, String> {
    pairs.into_iter().map(|(k, v)| (k.to_string(), v)).collect()
}

pub fn opt_path(p: &Option<PathBuf>) -> String {
    p.as_ref().map_or_else(|| "builtin".to_string(), |p| p.display().to_string())
}
