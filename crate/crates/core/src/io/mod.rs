//! Parsers and writers for every file the harness reads or writes.

mod annotations;
mod image;
mod manifest;
mod tensor;

use thiserror::Error;

pub use annotations::{
    parse_detections, parse_ground_truth, write_detections, write_ground_truth, BoundingBox,
    Detection, DetectionDoc, GroundTruthDoc, GroundTruthObject, ImageRecord,
};
pub use image::{read_png, write_png};
pub use manifest::{parse_manifest, write_manifest, StageEntry, StageManifest};
pub use tensor::{parse_tensor, read_tensor, write_tensor, write_tensor_file, Tensor3, TENSOR_MAGIC};

#[derive(Debug, Error)]
pub enum ArtifactError {
    #[error("bad magic: expected \"RXT1\"")]
    BadMagic,
    #[error("tensor header truncated: {0} bytes")]
    Truncated(usize),
    #[error("unsupported ndim {0}, only 3 is accepted")]
    NdimUnsupported(u32),
    #[error("tensor dims must be positive, got ({0}, {1}, {2})")]
    ZeroDim(u32, u32, u32),
    #[error("payload is {actual} bytes, dims require {expected}")]
    DimMismatch { expected: u128, actual: u128 },
    #[error("non-finite value at element {0}")]
    NonFinite(usize),
    #[error("schema error: {0}")]
    Schema(String),
    #[error("{field} = {value} outside [0, 1] ({context})")]
    Range {
        field: &'static str,
        value: f64,
        context: String,
    },
    #[error("invalid box {bbox:?} ({context})")]
    Box { bbox: [f64; 4], context: String },
    #[error("image {0} has more than one primary object")]
    PrimaryConflict(String),
    #[error("stage ids must be strictly increasing: {prev} then {next}")]
    StageOrder { prev: u32, next: u32 },
    #[error("epoch range {next:?} of stage {stage} overlaps or precedes {prev:?}")]
    EpochOverlap {
        stage: u32,
        prev: [u32; 2],
        next: [u32; 2],
    },
    #[error("I/O error on {path}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("cannot decode or encode image {path}")]
    Image {
        path: String,
        #[source]
        source: ::image::ImageError,
    },
}

impl ArtifactError {
    pub(crate) fn io(path: &std::path::Path, source: std::io::Error) -> Self {
        ArtifactError::Io {
            path: path.display().to_string(),
            source,
        }
    }
}

/// Reads a UTF-8 file, attaching the path to any error.
pub fn read_text(path: &std::path::Path) -> Result<String, ArtifactError> {
    std::fs::read_to_string(path).map_err(|e| ArtifactError::io(path, e))
}
