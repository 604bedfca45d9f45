//! Stage manifest: which files belong to which training stage.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::ArtifactError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StageEntry {
    pub id: u32,
    /// Inclusive `[first, last]` epoch range.
    pub epoch_range: [u32; 2],
    pub detections: PathBuf,
    pub ground_truth: PathBuf,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub attention_dir: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub restored_dir: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub input_dir: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StageManifest {
    pub stages: Vec<StageEntry>,
}

impl StageManifest {
    /// Makes every relative path relative to `base` (normally the manifest's
    /// own directory).
    pub fn resolve_paths(mut self, base: &Path) -> Self {
        let join = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        for s in &mut self.stages {
            join(&mut s.detections);
            join(&mut s.ground_truth);
            for p in [&mut s.attention_dir, &mut s.restored_dir, &mut s.input_dir].into_iter().flatten() {
                join(p);
            }
        }
        self
    }

    /// Reads and validates a manifest file, resolving paths against its directory.
    pub fn load(path: &Path) -> Result<Self, ArtifactError> {
        let text = super::read_text(path)?;
        let base = path.parent().unwrap_or_else(|| Path::new("."));
        Ok(parse_manifest(&text)?.resolve_paths(base))
    }
}

pub fn parse_manifest(text: &str) -> Result<StageManifest, ArtifactError> {
    let manifest: StageManifest = serde_json::from_str(text).map_err(|e| ArtifactError::Schema(e.to_string()))?;
    if manifest.stages.is_empty() {
        return Err(ArtifactError::Schema("manifest has no stages".into()));
    }
    let mut prev: Option<&StageEntry> = None;
    for s in &manifest.stages {
        if s.id == 0 {
            return Err(ArtifactError::Schema("stage ids must be positive".into()));
        }
        let [first, last] = s.epoch_range;
        if first > last {
            return Err(ArtifactError::Schema(format!(
                "stage {}: epoch range [{first}, {last}] is reversed",
                s.id
            )));
        }
        if let Some(p) = prev {
            if s.id <= p.id {
                return Err(ArtifactError::StageOrder { prev: p.id, next: s.id });
            }
            if first <= p.epoch_range[1] {
                return Err(ArtifactError::EpochOverlap {
                    stage: s.id,
                    prev: p.epoch_range,
                    next: s.epoch_range,
                });
            }
        }
        prev = Some(s);
    }
    Ok(manifest)
}

pub fn write_manifest(manifest: &StageManifest) -> String {
    let mut s = serde_json::to_string_pretty(manifest).expect("manifest always serializes");
    s.push('\n');
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    fn doc(stages: &[(u32, [u32; 2])]) -> String {
        let entries: Vec<String> = stages
            .iter()
            .map(|(id, r)| {
                format!(
                    r#"{{"id":{id},"epoch_range":[{},{}],"detections":"s{id}/d.json","ground_truth":"s{id}/g.json"}}"#,
                    r[0], r[1]
                )
            })
            .collect();
        format!(r#"{{"stages":[{}]}}"#, entries.join(","))
    }

    #[test]
    fn five_stages_of_twenty_epochs() {
        let stages: Vec<_> = (1..=5).map(|i| (i, [(i - 1) * 20 + 1, i * 20])).collect();
        let m = parse_manifest(&doc(&stages)).unwrap();
        assert_eq!(m.stages.len(), 5);
        assert_eq!(m.stages[4].epoch_range, [81, 100]);
        assert_eq!(m.stages[0].attention_dir, None);
    }

    #[test]
    fn stage_order() {
        let err = parse_manifest(&doc(&[(2, [1, 10]), (1, [11, 20])])).unwrap_err();
        assert!(matches!(err, ArtifactError::StageOrder { prev: 2, next: 1 }));
        let err = parse_manifest(&doc(&[(1, [1, 10]), (1, [11, 20])])).unwrap_err();
        assert!(matches!(err, ArtifactError::StageOrder { .. }));
    }

    #[test]
    fn epoch_overlap() {
        let err = parse_manifest(&doc(&[(1, [1, 20]), (2, [15, 30])])).unwrap_err();
        assert!(matches!(err, ArtifactError::EpochOverlap { stage: 2, .. }));
    }

    #[test]
    fn other_schema_errors() {
        assert!(matches!(parse_manifest(r#"{"stages":[]}"#), Err(ArtifactError::Schema(_))));
        assert!(matches!(parse_manifest(&doc(&[(1, [5, 2])])), Err(ArtifactError::Schema(_))));
        assert!(matches!(parse_manifest(&doc(&[(0, [1, 2])])), Err(ArtifactError::Schema(_))));
        assert!(matches!(parse_manifest(r#"{"stages":[{"id":1}]}"#), Err(ArtifactError::Schema(_))));
    }

    #[test]
    fn resolves_relative_paths() {
        let m = parse_manifest(&doc(&[(1, [1, 2])])).unwrap().resolve_paths(Path::new("/data/run"));
        assert_eq!(m.stages[0].detections, PathBuf::from("/data/run/s1/d.json"));
    }
}
