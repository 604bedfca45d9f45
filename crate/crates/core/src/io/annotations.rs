//! Detection and ground-truth JSON documents.
//!
//! ```text
//! detections.json   {"images":[{"id","width","height","detections":[{"box","label","score","explain_prob"?}]}]}
//! ground_truth.json {"images":[{"id","width","height","objects":[{"box","label","primary"?}]}]}
//! ```
//!
//! Boxes are corner form `[x_min, y_min, x_max, y_max]` in pixels.

use std::collections::HashSet;

use serde::{Deserialize, Serialize};

use super::ArtifactError;
use crate::similarity::normalize_label;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundingBox {
    pub x_min: f64,
    pub y_min: f64,
    pub x_max: f64,
    pub y_max: f64,
}

impl BoundingBox {
    pub fn new(x_min: f64, y_min: f64, x_max: f64, y_max: f64) -> Result<Self, ArtifactError> {
        Self::from_corners([x_min, y_min, x_max, y_max], "")
    }

    fn from_corners(c: [f64; 4], context: &str) -> Result<Self, ArtifactError> {
        let ok = c.iter().all(|v| v.is_finite() && *v >= 0.0) && c[0] < c[2] && c[1] < c[3];
        if !ok {
            return Err(ArtifactError::Box {
                bbox: c,
                context: context.to_string(),
            });
        }
        Ok(BoundingBox {
            x_min: c[0],
            y_min: c[1],
            x_max: c[2],
            y_max: c[3],
        })
    }

    pub fn corners(&self) -> [f64; 4] {
        [self.x_min, self.y_min, self.x_max, self.y_max]
    }

    pub fn width(&self) -> f64 {
        self.x_max - self.x_min
    }

    pub fn height(&self) -> f64 {
        self.y_max - self.y_min
    }

    pub fn area(&self) -> f64 {
        self.width() * self.height()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Detection {
    pub image_id: String,
    pub bbox: BoundingBox,
    /// Raw label as emitted by the detector or classifier.
    pub label: String,
    pub score: f64,
    /// Classifier probability for `label`, exported alongside the Grad-CAM
    /// tensors.
    pub explain_prob: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GroundTruthObject {
    pub image_id: String,
    pub bbox: BoundingBox,
    pub label: String,
    pub primary: Option<bool>,
}

/// One image entry with its payload objects, in document order.
#[derive(Debug, Clone, PartialEq)]
pub struct ImageRecord<T> {
    pub id: String,
    pub width: u32,
    pub height: u32,
    pub items: Vec<T>,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct DetectionDoc {
    pub images: Vec<ImageRecord<Detection>>,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct GroundTruthDoc {
    pub images: Vec<ImageRecord<GroundTruthObject>>,
}

macro_rules! doc_accessors {
    ($doc:ty, $item:ty) => {
        impl $doc {
            pub fn image(&self, id: &str) -> Option<&ImageRecord<$item>> {
                self.images.iter().find(|r| r.id == id)
            }

            /// Every object across images, in document order.
            pub fn all(&self) -> impl Iterator<Item = &$item> {
                self.images.iter().flat_map(|r| r.items.iter())
            }

            /// `(image id, object count)` in document order.
            pub fn group_sizes(&self) -> Vec<(&str, usize)> {
                self.images.iter().map(|r| (r.id.as_str(), r.items.len())).collect()
            }
        }
    };
}

doc_accessors!(DetectionDoc, Detection);
doc_accessors!(GroundTruthDoc, GroundTruthObject);

#[derive(Serialize, Deserialize)]
struct RawDoc<T> {
    images: Vec<T>,
}

#[derive(Serialize, Deserialize)]
struct RawDetImage {
    id: String,
    width: u32,
    height: u32,
    detections: Vec<RawDetection>,
}

#[derive(Serialize, Deserialize)]
struct RawDetection {
    #[serde(rename = "box")]
    bbox: [f64; 4],
    label: String,
    score: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    explain_prob: Option<f64>,
}

#[derive(Serialize, Deserialize)]
struct RawGtImage {
    id: String,
    width: u32,
    height: u32,
    objects: Vec<RawObject>,
}

#[derive(Serialize, Deserialize)]
struct RawObject {
    #[serde(rename = "box")]
    bbox: [f64; 4],
    label: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    primary: Option<bool>,
}

fn schema(e: serde_json::Error) -> ArtifactError {
    ArtifactError::Schema(e.to_string())
}

fn check_unit(field: &'static str, value: f64, context: impl Fn() -> String) -> Result<(), ArtifactError> {
    if (0.0..=1.0).contains(&value) {
        Ok(())
    } else {
        Err(ArtifactError::Range {
            field,
            value,
            context: context(),
        })
    }
}

fn check_label(label: &str, context: impl Fn() -> String) -> Result<(), ArtifactError> {
    normalize_label(label)
        .map(|_| ())
        .map_err(|_| ArtifactError::Schema(format!("empty label ({})", context())))
}

fn check_image(id: &str, width: u32, height: u32, seen: &mut HashSet<String>) -> Result<(), ArtifactError> {
    if width == 0 || height == 0 {
        return Err(ArtifactError::Schema(format!("image {id}: width and height must be positive")));
    }
    if !seen.insert(id.to_string()) {
        return Err(ArtifactError::Schema(format!("duplicate image id {id}")));
    }
    Ok(())
}

pub fn parse_detections(text: &str) -> Result<DetectionDoc, ArtifactError> {
    let raw: RawDoc<RawDetImage> = serde_json::from_str(text).map_err(schema)?;
    let mut seen = HashSet::new();
    let mut images = Vec::with_capacity(raw.images.len());
    for img in raw.images {
        check_image(&img.id, img.width, img.height, &mut seen)?;
        let mut items = Vec::with_capacity(img.detections.len());
        for (i, d) in img.detections.into_iter().enumerate() {
            let ctx = || format!("image {} detection {}", img.id, i);
            let bbox = BoundingBox::from_corners(d.bbox, &ctx())?;
            check_unit("score", d.score, ctx)?;
            if let Some(p) = d.explain_prob {
                check_unit("explain_prob", p, ctx)?;
            }
            check_label(&d.label, ctx)?;
            items.push(Detection {
                image_id: img.id.clone(),
                bbox,
                label: d.label,
                score: d.score,
                explain_prob: d.explain_prob,
            });
        }
        images.push(ImageRecord {
            id: img.id,
            width: img.width,
            height: img.height,
            items,
        });
    }
    Ok(DetectionDoc { images })
}

pub fn parse_ground_truth(text: &str) -> Result<GroundTruthDoc, ArtifactError> {
    let raw: RawDoc<RawGtImage> = serde_json::from_str(text).map_err(schema)?;
    let mut seen = HashSet::new();
    let mut images = Vec::with_capacity(raw.images.len());
    for img in raw.images {
        check_image(&img.id, img.width, img.height, &mut seen)?;
        let mut items = Vec::with_capacity(img.objects.len());
        let mut has_primary = false;
        for (i, o) in img.objects.into_iter().enumerate() {
            let ctx = || format!("image {} object {}", img.id, i);
            let bbox = BoundingBox::from_corners(o.bbox, &ctx())?;
            check_label(&o.label, ctx)?;
            if o.primary == Some(true) {
                if has_primary {
                    return Err(ArtifactError::PrimaryConflict(img.id.clone()));
                }
                has_primary = true;
            }
            items.push(GroundTruthObject {
                image_id: img.id.clone(),
                bbox,
                label: o.label,
                primary: o.primary,
            });
        }
        images.push(ImageRecord {
            id: img.id,
            width: img.width,
            height: img.height,
            items,
        });
    }
    Ok(GroundTruthDoc { images })
}

fn to_pretty<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("annotation documents always serialize");
    s.push('\n');
    s
}

pub fn write_detections(doc: &DetectionDoc) -> String {
    let raw = RawDoc {
        images: doc
            .images
            .iter()
            .map(|r| RawDetImage {
                id: r.id.clone(),
                width: r.width,
                height: r.height,
                detections: r
                    .items
                    .iter()
                    .map(|d| RawDetection {
                        bbox: d.bbox.corners(),
                        label: d.label.clone(),
                        score: d.score,
                        explain_prob: d.explain_prob,
                    })
                    .collect(),
            })
            .collect(),
    };
    to_pretty(&raw)
}

pub fn write_ground_truth(doc: &GroundTruthDoc) -> String {
    let raw = RawDoc {
        images: doc
            .images
            .iter()
            .map(|r| RawGtImage {
                id: r.id.clone(),
                width: r.width,
                height: r.height,
                objects: r
                    .items
                    .iter()
                    .map(|o| RawObject {
                        bbox: o.bbox.corners(),
                        label: o.label.clone(),
                        primary: o.primary,
                    })
                    .collect(),
            })
            .collect(),
    };
    to_pretty(&raw)
}
