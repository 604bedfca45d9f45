//! Binary label similarity.
//!
//! Two modes:
//!
//! - **strict**: labels are similar only when they are the same label;
//! - **grouped**: labels are also similar when they belong to the same group,
//!   e.g. "taxi" and "race car" both count as "car".
//!
//! Each group has a head class (car, bus, person, ...) that detector and
//! classifier vocabularies fold into for per-class AP.

use std::collections::HashMap;
use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum SimilarityError {
    #[error("label is empty after normalization")]
    EmptyLabel,
    #[error("label {label:?} appears in groups {first:?} and {second:?}")]
    OverlappingGroups {
        label: String,
        first: String,
        second: String,
    },
    #[error("similarity {0} is not supported, groups must have similarity 1")]
    FractionalSimilarity(f64),
    #[error("similarity table: {0}")]
    Schema(String),
}

/// Lowercases, trims, turns hyphens into spaces and collapses whitespace.
pub fn normalize_label(raw: &str) -> Result<String, SimilarityError> {
    let lowered = raw.to_lowercase().replace('-', " ");
    let out = lowered.split_whitespace().collect::<Vec<_>>().join(" ");
    if out.is_empty() {
        Err(SimilarityError::EmptyLabel)
    } else {
        Ok(out)
    }
}

/// A normalized, non-empty label.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Label(String);

impl Label {
    pub fn new(raw: &str) -> Result<Self, SimilarityError> {
        normalize_label(raw).map(Label)
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SimilarityMode {
    Grouped,
    Strict,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LabelGroup {
    pub head: Label,
    /// Includes the head.
    pub members: Vec<Label>,
}

#[derive(Debug, Clone)]
pub struct SimilarityTable {
    mode: SimilarityMode,
    groups: Vec<LabelGroup>,
    index: HashMap<Label, usize>,
}

/// The synonym groups used by default, head first.
const DEFAULT_GROUPS: &[(&str, &[&str])] = &[
    ("person", &["groom", "bridegroom", "baseball player", "scuba diver"]),
    (
        "car",
        &["cab", "taxi", "race car", "jeep", "minivan", "estate car", "station wagon"],
    ),
    ("motorcycle", &["moped"]),
    ("bus", &["trolley bus", "mini bus", "school bus"]),
    (
        "bicycle",
        &[
            "tandem bicycle",
            "tricycle",
            "unicycle",
            "mountain bike",
            "all terrain bike",
            "off roader",
            "trike",
        ],
    ),
    // not part of the synonym list, but a detection class in the weather benchmarks
    ("truck", &[]),
];

#[derive(Serialize, Deserialize)]
struct RawTable {
    mode: SimilarityMode,
    groups: Vec<RawGroup>,
}

#[derive(Serialize, Deserialize)]
struct RawGroup {
    head: String,
    #[serde(default)]
    members: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    similarity: Option<f64>,
}

impl SimilarityTable {
    /// Builds a table from `(head, members)` pairs. The head is added to its
    /// own group if not listed.
    pub fn new<'a, I, M>(mode: SimilarityMode, groups: I) -> Result<Self, SimilarityError>
    where
        I: IntoIterator<Item = (&'a str, M)>,
        M: IntoIterator<Item = &'a str>,
    {
        let mut built: Vec<LabelGroup> = Vec::new();
        let mut index: HashMap<Label, usize> = HashMap::new();
        for (head, members) in groups {
            let head = Label::new(head)?;
            let gi = built.len();
            let mut group = LabelGroup {
                head: head.clone(),
                members: Vec::new(),
            };
            let labels = std::iter::once(Ok(head.clone())).chain(members.into_iter().map(Label::new));
            for label in labels {
                let label = label?;
                match index.get(&label) {
                    Some(&other) if other == gi => continue,
                    Some(&other) => {
                        return Err(SimilarityError::OverlappingGroups {
                            label: label.0,
                            first: built[other].head.0.clone(),
                            second: head.0.clone(),
                        })
                    }
                    None => {
                        index.insert(label.clone(), gi);
                        group.members.push(label);
                    }
                }
            }
            built.push(group);
        }
        Ok(SimilarityTable {
            mode,
            groups: built,
            index,
        })
    }

    /// Person, car, motorcycle, bus, bicycle synonym groups plus a singleton
    /// truck group.
    pub fn default_table(mode: SimilarityMode) -> Self {
        Self::new(mode, DEFAULT_GROUPS.iter().map(|(h, m)| (*h, m.iter().copied())))
            .expect("default groups are disjoint")
    }

    pub fn from_json(text: &str) -> Result<Self, SimilarityError> {
        let raw: RawTable = serde_json::from_str(text).map_err(|e| SimilarityError::Schema(e.to_string()))?;
        for g in &raw.groups {
            if let Some(s) = g.similarity {
                if s != 1.0 {
                    return Err(SimilarityError::FractionalSimilarity(s));
                }
            }
        }
        Self::new(
            raw.mode,
            raw.groups
                .iter()
                .map(|g| (g.head.as_str(), g.members.iter().map(String::as_str))),
        )
    }

    pub fn load(path: &Path) -> Result<Self, SimilarityError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| SimilarityError::Schema(format!("{}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    pub fn to_json(&self) -> String {
        let raw = RawTable {
            mode: self.mode,
            groups: self
                .groups
                .iter()
                .map(|g| RawGroup {
                    head: g.head.0.clone(),
                    members: g.members.iter().filter(|m| **m != g.head).map(|m| m.0.clone()).collect(),
                    similarity: None,
                })
                .collect(),
        };
        let mut s = serde_json::to_string_pretty(&raw).expect("table always serializes");
        s.push('\n');
        s
    }

    pub fn mode(&self) -> SimilarityMode {
        self.mode
    }

    pub fn with_mode(mut self, mode: SimilarityMode) -> Self {
        self.mode = mode;
        self
    }

    pub fn groups(&self) -> &[LabelGroup] {
        &self.groups
    }

    /// 1 when `p` and `a` count as the same object, else 0.
    pub fn similarity(&self, p: &Label, a: &Label) -> u8 {
        if p == a {
            return 1;
        }
        match self.mode {
            SimilarityMode::Strict => 0,
            SimilarityMode::Grouped => match (self.index.get(p), self.index.get(a)) {
                (Some(gp), Some(ga)) if gp == ga => 1,
                _ => 0,
            },
        }
    }

    /// Head class of the group containing `label`, or `None` when the label
    /// is in no group. Independent of the similarity mode.
    pub fn canonical_class(&self, label: &Label) -> Option<&Label> {
        self.index.get(label).map(|&g| &self.groups[g].head)
    }

    /// Bucket used for per-class AP: the head class when known, otherwise
    /// the label itself.
    pub fn class_key(&self, label: &Label) -> Label {
        self.canonical_class(label).unwrap_or(label).clone()
    }
}
