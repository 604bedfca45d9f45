pub mod eval;
pub mod fixtures;
pub mod gradcam;
pub mod monitor;
pub mod psnr;
pub mod report;
pub mod similarity;

use std::path::Path;

use anyhow::Context;
use restorex_core::eval::DAWN_CLASSES;
use restorex_core::io::{self, DetectionDoc, GroundTruthDoc};
use restorex_core::{SimilarityMode, SimilarityTable};

/// The given table, or the built-in grouped table.
pub fn load_table(path: Option<&Path>) -> anyhow::Result<SimilarityTable> {
    match path {
        Some(p) => SimilarityTable::load(p).with_context(|| format!("similarity table {}", p.display())),
        None => Ok(SimilarityTable::default_table(SimilarityMode::Grouped)),
    }
}

pub fn load_detections(path: &Path) -> anyhow::Result<DetectionDoc> {
    io::parse_detections(&io::read_text(path)?).with_context(|| format!("detections {}", path.display()))
}

pub fn load_ground_truth(path: &Path) -> anyhow::Result<GroundTruthDoc> {
    io::parse_ground_truth(&io::read_text(path)?).with_context(|| format!("ground truth {}", path.display()))
}

pub fn default_classes() -> Vec<String> {
    DAWN_CLASSES.iter().map(|s| s.to_string()).collect()
}
