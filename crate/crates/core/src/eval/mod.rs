//! Detection evaluation: IoU matching, per-class AP, mAP and PSNR.

mod ap;
mod matching;
mod psnr;

use thiserror::Error;

pub use ap::{average_precision, mean_ap, ApMode, ApReport, ClassAp, ClassSelection, DAWN_CLASSES};
pub use matching::{iou, match_detections, ClassMatches, MatchRecord, MatchSet};
pub use psnr::{psnr, Psnr};

#[derive(Debug, Error, PartialEq)]
pub enum EvalError {
    #[error("class list is empty")]
    EmptyClassList,
    #[error("image dimensions differ: {a:?} vs {b:?}")]
    DimMismatch { a: (u32, u32), b: (u32, u32) },
    #[error("iou threshold {0} must lie in (0, 1)")]
    BadThreshold(f64),
}
