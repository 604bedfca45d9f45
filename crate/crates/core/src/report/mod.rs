//! Run reports in the per-stage AP table layout, plus heat-map overlays.

mod markdown;
mod overlay;
mod provenance;

use serde_json::json;
use thiserror::Error;

pub use markdown::render_markdown;
pub use overlay::{colormap, render_overlay};
pub use provenance::{sha256_hex, InputDigest, Provenance};

use crate::eval::{ApReport, EvalError};
use crate::monitor::Decision;

#[derive(Debug, Error, PartialEq)]
pub enum ReportError {
    #[error(transparent)]
    Eval(#[from] EvalError),
    #[error("row {row:?} covers classes {found:?}, report expects {expected:?}")]
    ClassMismatch {
        row: String,
        expected: Vec<String>,
        found: Vec<String>,
    },
    #[error("heat map is {heat:?} but image is {image:?}")]
    DimMismatch { heat: (usize, usize), image: (usize, usize) },
    #[error("alpha {0} outside [0, 1]")]
    BadAlpha(f64),
}

/// One table row: a training stage or a noise level.
#[derive(Debug, Clone, PartialEq)]
pub struct ReportRow {
    pub label: String,
    pub aps: ApReport,
    pub phi: Option<f64>,
    pub delta_phi: Option<f64>,
    pub decision: Option<Decision>,
}

impl ReportRow {
    pub fn new(label: impl Into<String>, aps: ApReport) -> Self {
        ReportRow {
            label: label.into(),
            aps,
            phi: None,
            delta_phi: None,
            decision: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunReport {
    pub technique: String,
    pub classes: Vec<String>,
    pub rows: Vec<ReportRow>,
    pub provenance: Provenance,
}

impl RunReport {
    pub fn new(
        technique: impl Into<String>,
        classes: Vec<String>,
        rows: Vec<ReportRow>,
        provenance: Provenance,
    ) -> Result<Self, ReportError> {
        if classes.is_empty() {
            return Err(EvalError::EmptyClassList.into());
        }
        for row in &rows {
            let found: Vec<String> = row.aps.classes.keys().cloned().collect();
            if found != classes {
                return Err(ReportError::ClassMismatch {
                    row: row.label.clone(),
                    expected: classes,
                    found,
                });
            }
        }
        Ok(RunReport {
            technique: technique.into(),
            classes,
            rows,
            provenance,
        })
    }

    pub fn has_phi(&self) -> bool {
        self.rows.iter().any(|r| r.phi.is_some())
    }

    pub fn to_json(&self) -> serde_json::Value {
        let rows: Vec<_> = self
            .rows
            .iter()
            .map(|r| {
                let mut v = r.aps.to_json();
                let obj = v.as_object_mut().expect("ap report is an object");
                obj.insert("label".into(), json!(r.label));
                if let Some(phi) = r.phi {
                    obj.insert("phi".into(), json!(phi));
                }
                if let Some(d) = r.delta_phi {
                    obj.insert("delta_phi".into(), json!(d));
                }
                if let Some(d) = r.decision {
                    obj.insert("decision".into(), json!(d));
                }
                v
            })
            .collect();
        json!({
            "technique": self.technique,
            "classes": self.classes,
            "rows": rows,
            "provenance": self.provenance.to_json(),
        })
    }
}

/// Pretty JSON with a trailing newline.
pub fn to_json_text(value: &serde_json::Value) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("json values serialize");
    s.push('\n');
    s
}
