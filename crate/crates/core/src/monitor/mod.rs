//! Stage-by-stage restoration quality.
//!
//! Each stage's score is the mean over its samples of
//! `similarity(predicted, actual) × explanation probability`, a value in
//! `[0, 1]`. The trajectory carries the scores, their stage-to-stage
//! differences, and a guidance decision per stage.

mod improvement;
mod policy;
mod samples;

use std::path::Path;

use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

pub use improvement::{improvement_summary, mean_improvement, ImprovementSummary};
pub use policy::{decide, rollback_index, Decision, GuidancePolicy};
pub use samples::{build_samples, PairingMode, SampleScore, PAIRING_IOU};

use crate::gradcam::{self, GradcamError};
use crate::io::{self, ArtifactError, GroundTruthDoc, StageEntry, StageManifest};
use crate::numeric::{exact_sum, snap_unit, UNIT_GRID};
use crate::similarity::SimilarityTable;

#[derive(Debug, Error)]
pub enum MonitorError {
    #[error("stage has no samples")]
    EmptyStage,
    #[error("image {0}: detection without explain_prob")]
    MissingExplainProb(String),
    #[error("image {0} has detections but no ground-truth objects")]
    NoGroundTruth(String),
    #[error("invalid policy: {0}")]
    BadPolicy(String),
    #[error("before and after lists differ in length ({0} vs {1})")]
    LengthMismatch(usize, usize),
    #[error("no values to summarize")]
    EmptyInput,
    #[error("stage {stage}")]
    Stage {
        stage: u32,
        #[source]
        source: Box<MonitorError>,
    },
    #[error(transparent)]
    Artifact(#[from] ArtifactError),
    #[error("grad-cam for image {image}")]
    Gradcam {
        image: String,
        #[source]
        source: GradcamError,
    },
}

impl MonitorError {
    fn in_stage(self, stage: u32) -> Self {
        MonitorError::Stage {
            stage,
            source: Box::new(self),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct StageQuality {
    #[serde(rename = "id")]
    pub stage_id: u32,
    pub n: usize,
    pub phi: f64,
}

/// Mean sample term for one stage.
///
/// The sum is exact and order-independent; the mean is stored on a 2^-53
/// grid so that differences between stages add up exactly.
pub fn phi(stage_id: u32, samples: &[SampleScore]) -> Result<StageQuality, MonitorError> {
    if samples.is_empty() {
        return Err(MonitorError::EmptyStage);
    }
    let terms = samples
        .iter()
        .map(|s| s.term().ok_or_else(|| MonitorError::MissingExplainProb(s.image_id.clone())))
        .collect::<Result<Vec<f64>, _>>()?;
    let n = terms.len();
    let mut value = snap_unit(exact_sum(terms.iter().copied()) / n as f64).clamp(0.0, 1.0);
    if value == 1.0 && terms.iter().any(|&t| t < 1.0) {
        value = 1.0 - UNIT_GRID;
    }
    Ok(StageQuality { stage_id, n, phi: value })
}

/// Share of Grad-CAM heat on ground-truth objects, averaged over a stage.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct AttentionSummary {
    /// Mean over images with a non-blank map; `None` if there were none.
    pub mean_in_box: Option<f64>,
    pub images: usize,
    pub blank: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StageOutcome {
    #[serde(flatten)]
    pub quality: StageQuality,
    pub decision: Decision,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub attention: Option<AttentionSummary>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Trajectory {
    pub stages: Vec<StageOutcome>,
    pub deltas: Vec<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub rollback_to: Option<u32>,
}

impl Trajectory {
    /// Assembles decisions and differences from per-stage results, in order.
    pub fn assemble(results: Vec<(StageQuality, Option<AttentionSummary>)>, policy: &GuidancePolicy) -> Self {
        let phis: Vec<f64> = results.iter().map(|(q, _)| q.phi).collect();
        let decisions = decide(&phis, policy);
        let deltas = phis.windows(2).map(|w| w[1] - w[0]).collect();
        let rollback_to = rollback_index(&phis, &decisions).map(|i| results[i].0.stage_id);
        let stages = results
            .into_iter()
            .zip(decisions)
            .map(|((quality, attention), decision)| StageOutcome {
                quality,
                decision,
                attention,
            })
            .collect();
        Trajectory {
            stages,
            deltas,
            rollback_to,
        }
    }

    pub fn from_qualities(qualities: Vec<StageQuality>, policy: &GuidancePolicy) -> Self {
        Self::assemble(qualities.into_iter().map(|q| (q, None)).collect(), policy)
    }

    pub fn phis(&self) -> Vec<f64> {
        self.stages.iter().map(|s| s.quality.phi).collect()
    }

    pub fn decisions(&self) -> Vec<Decision> {
        self.stages.iter().map(|s| s.decision).collect()
    }

    pub fn stop_recommended(&self) -> bool {
        self.stages.iter().any(|s| s.decision == Decision::Stop)
    }

    pub fn to_json(&self) -> serde_json::Value {
        serde_json::to_value(self).expect("trajectory always serializes")
    }
}

/// Scores one stage's detection and ground-truth files.
pub fn stage_quality(
    entry: &StageEntry,
    table: &SimilarityTable,
    pairing: PairingMode,
) -> Result<StageQuality, MonitorError> {
    let dets = io::parse_detections(&io::read_text(&entry.detections)?)?;
    let gts = io::parse_ground_truth(&io::read_text(&entry.ground_truth)?)?;
    let samples = build_samples(&dets, &gts, table, pairing)?;
    phi(entry.id, &samples)
}

/// Grad-CAM attention on ground-truth boxes for every image that has an
/// exported `<id>.features.rxt` / `<id>.gradients.rxt` pair in `dir`.
pub fn stage_attention(dir: &Path, gts: &GroundTruthDoc) -> Result<AttentionSummary, MonitorError> {
    let with_tensors: Vec<_> = gts
        .images
        .iter()
        .filter(|r| !r.items.is_empty())
        .map(|r| {
            (
                r,
                dir.join(format!("{}.features.rxt", r.id)),
                dir.join(format!("{}.gradients.rxt", r.id)),
            )
        })
        .filter(|(_, f, g)| f.is_file() && g.is_file())
        .collect();

    let fractions = with_tensors
        .par_iter()
        .map(|(rec, fpath, gpath)| {
            let features = io::read_tensor(fpath)?;
            let gradients = io::read_tensor(gpath)?;
            let wrap = |source| MonitorError::Gradcam {
                image: rec.id.clone(),
                source,
            };
            let heat = gradcam::normalize(&gradcam::gradcam(&features, &gradients).map_err(wrap)?);
            let heat = gradcam::upsample(&heat, rec.height as usize, rec.width as usize).map_err(wrap)?;
            let boxes: Vec<_> = rec.items.iter().map(|o| o.bbox).collect();
            gradcam::attention_in_box(&heat, &boxes).map_err(wrap)
        })
        .collect::<Result<Vec<_>, MonitorError>>()?;

    let lit: Vec<f64> = fractions.iter().filter(|f| !f.is_blank).map(|f| f.fraction).collect();
    Ok(AttentionSummary {
        mean_in_box: (!lit.is_empty()).then(|| exact_sum(lit.iter().copied()) / lit.len() as f64),
        images: fractions.len(),
        blank: fractions.len() - lit.len(),
    })
}

fn evaluate_stage(
    entry: &StageEntry,
    table: &SimilarityTable,
    pairing: PairingMode,
) -> Result<(StageQuality, Option<AttentionSummary>), MonitorError> {
    let quality = stage_quality(entry, table, pairing)?;
    let attention = match &entry.attention_dir {
        Some(dir) => {
            let gts = io::parse_ground_truth(&io::read_text(&entry.ground_truth)?)?;
            Some(stage_attention(dir, &gts)?)
        }
        None => None,
    };
    Ok((quality, attention))
}

/// Scores every stage in the manifest (stages in parallel) and derives the
/// guidance sequence in stage order.
pub fn trajectory(
    manifest: &StageManifest,
    table: &SimilarityTable,
    policy: &GuidancePolicy,
    pairing: PairingMode,
) -> Result<Trajectory, MonitorError> {
    let results = manifest
        .stages
        .par_iter()
        .map(|entry| evaluate_stage(entry, table, pairing).map_err(|e| e.in_stage(entry.id)))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(Trajectory::assemble(results, policy))
}
