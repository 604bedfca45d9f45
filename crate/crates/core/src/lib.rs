//! restorex: scores image-restoration outputs by how useful they are to an
//! object detector.
//!
//! The harness never runs a network. It ingests detector outputs, ground
//! truth, and exported (feature map, gradient) tensor pairs, and from those
//! computes:
//!
//! - Grad-CAM localization maps and how much of their mass lands on objects
//!   ([`gradcam`]);
//! - the per-stage restoration quality score, the mean over samples of
//!   label similarity times explanation probability, together with its
//!   stage-to-stage differences and a continue/flag/stop decision
//!   ([`monitor`], [`similarity`]);
//! - per-class AP, mAP and a PSNR baseline ([`eval`]);
//! - Markdown/JSON reports and heat-map overlays ([`report`]).
//!
//! [`fixtures`] generates deterministic synthetic inputs for all of the above.

pub mod eval;
pub mod fixtures;
pub mod gradcam;
pub mod io;
pub mod monitor;
pub mod numeric;
pub mod report;
pub mod similarity;

pub use eval::{ApMode, ApReport, ClassSelection, MatchSet};
pub use gradcam::{CamMap, HeatMap, NeuronWeights};
pub use io::{BoundingBox, Detection, GroundTruthObject, StageManifest, Tensor3};
pub use monitor::{Decision, GuidancePolicy, PairingMode, SampleScore, StageQuality, Trajectory};
pub use similarity::{Label, SimilarityMode, SimilarityTable};
