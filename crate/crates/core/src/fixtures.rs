//! Deterministic synthetic inputs for the whole harness.
//!
//! Randomness comes from ChaCha8 (`rand_chacha::ChaCha8Rng`) seeded with
//! `seed_from_u64`, which is specified to produce the same stream on every
//! platform. Generation is single-threaded and writes files in a fixed
//! order, so a given [`FixtureSpec`] always yields the same bytes.
//!
//! Output layout:
//!
//! ```text
//! manifest.json  similarity.json  policy.json  ground_truth.json
//! input/<id>.png
//! stage_<n>/detections.json
//! stage_<n>/attention/<id>.features.rxt, <id>.gradients.rxt
//! stage_<n>/restored/<id>.png
//! ```

use std::path::{Path, PathBuf};

use image::{Rgb, RgbImage};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::eval::DAWN_CLASSES;
use crate::io::{
    self, ArtifactError, BoundingBox, Detection, DetectionDoc, GroundTruthDoc, GroundTruthObject, ImageRecord,
    StageEntry, StageManifest, Tensor3,
};
use crate::monitor::GuidancePolicy;
use crate::similarity::{Label, SimilarityMode, SimilarityTable};

#[derive(Debug, Error)]
pub enum FixtureError {
    #[error(transparent)]
    Io(#[from] ArtifactError),
    #[error("invalid fixture spec: {0}")]
    Invalid(String),
}

#[derive(Debug, Clone, PartialEq)]
pub struct FixtureSpec {
    pub seed: u64,
    pub n_images: usize,
    pub n_stages: usize,
    pub classes: Vec<String>,
    /// Desired stage score per stage. Each stage then has exactly
    /// `round(target · n_images)` correctly labelled images with explanation
    /// probability 1, and every other image scores 0.
    pub phi_targets: Option<Vec<f64>>,
    /// `(channels, height, width)` of the exported activations.
    pub tensor_dims: (usize, usize, usize),
    /// `(height, width)` of the images.
    pub image_dims: (u32, u32),
    pub epochs_per_stage: u32,
}

impl Default for FixtureSpec {
    fn default() -> Self {
        FixtureSpec {
            seed: 42,
            n_images: 20,
            n_stages: 5,
            classes: DAWN_CLASSES.iter().map(|s| s.to_string()).collect(),
            phi_targets: None,
            tensor_dims: (4, 8, 8),
            image_dims: (32, 32),
            epochs_per_stage: 20,
        }
    }
}

impl FixtureSpec {
    fn validate(&self) -> Result<(), FixtureError> {
        let bad = |m: String| Err(FixtureError::Invalid(m));
        if self.n_images == 0 || self.n_stages == 0 {
            return bad("need at least one image and one stage".into());
        }
        if self.classes.is_empty() {
            return bad("class vocabulary is empty".into());
        }
        if let Some(t) = &self.phi_targets {
            if t.len() != self.n_stages {
                return bad(format!("{} targets for {} stages", t.len(), self.n_stages));
            }
            if let Some(x) = t.iter().find(|x| !(0.0..=1.0).contains(*x)) {
                return bad(format!("target {x} outside [0, 1]"));
            }
        }
        let (k, u, v) = self.tensor_dims;
        let (h, w) = self.image_dims;
        if k == 0 || u == 0 || v == 0 {
            return bad("tensor dims must be positive".into());
        }
        if h < 8 || w < 8 || u > h as usize || v > w as usize {
            return bad(format!("image {h}x{w} must be at least 8x8 and cover tensor {u}x{v}"));
        }
        if self.epochs_per_stage == 0 {
            return bad("epochs_per_stage must be positive".into());
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct GeneratedFixture {
    pub manifest_path: PathBuf,
    pub manifest: StageManifest,
    pub similarity_path: PathBuf,
    pub policy_path: PathBuf,
}

struct Scene {
    id: String,
    class: String,
    primary: BoundingBox,
    objects: Vec<GroundTruthObject>,
}

fn write(path: &Path, contents: &[u8]) -> Result<(), ArtifactError> {
    std::fs::write(path, contents).map_err(|e| ArtifactError::io(path, e))
}

fn mkdir(path: &Path) -> Result<(), ArtifactError> {
    std::fs::create_dir_all(path).map_err(|e| ArtifactError::io(path, e))
}

fn random_box(rng: &mut ChaCha8Rng, w: u32, h: u32, min_frac: u32, max_frac: u32) -> BoundingBox {
    let bw = rng.random_range(w / min_frac..=w / max_frac).max(1);
    let bh = rng.random_range(h / min_frac..=h / max_frac).max(1);
    let x0 = rng.random_range(0..=w - bw);
    let y0 = rng.random_range(0..=h - bh);
    BoundingBox::new(x0 as f64, y0 as f64, (x0 + bw) as f64, (y0 + bh) as f64).expect("positive extent")
}

fn jitter(rng: &mut ChaCha8Rng, b: &BoundingBox, w: u32, h: u32) -> BoundingBox {
    let mut d = || rng.random_range(-1i32..=1) as f64;
    let x0 = (b.x_min + d()).clamp(0.0, w as f64 - 2.0);
    let y0 = (b.y_min + d()).clamp(0.0, h as f64 - 2.0);
    let x1 = (b.x_max + d()).clamp(x0 + 1.0, w as f64);
    let y1 = (b.y_max + d()).clamp(y0 + 1.0, h as f64);
    BoundingBox::new(x0, y0, x1, y1).expect("clamped box is valid")
}

fn class_color(class: &str) -> [u8; 3] {
    let i = DAWN_CLASSES.iter().position(|c| *c == class).unwrap_or(6);
    [[200, 40, 40], [240, 200, 30], [60, 160, 60], [40, 90, 220], [220, 120, 200], [30, 200, 200], [150, 150, 150]][i]
}

fn render_scene(rng: &mut ChaCha8Rng, scene: &Scene, w: u32, h: u32, noise: i32) -> RgbImage {
    RgbImage::from_fn(w, h, |x, y| {
        let (cx, cy) = (x as f64 + 0.5, y as f64 + 0.5);
        let b = &scene.primary;
        let base = if cx >= b.x_min && cx <= b.x_max && cy >= b.y_min && cy <= b.y_max {
            class_color(&scene.class)
        } else {
            let g = (60 + (y * 120) / h) as u8;
            [g, g, g.saturating_add(20)]
        };
        let mut px = [0u8; 3];
        for ch in 0..3 {
            let n = if noise > 0 { rng.random_range(-noise..=noise) } else { 0 };
            px[ch] = (base[ch] as i32 + n).clamp(0, 255) as u8;
        }
        Rgb(px)
    })
}

/// Activations with an object-shaped blob in channel 0, and gradients that
/// weight channel 0 positively and the rest near zero.
fn attention_tensors(rng: &mut ChaCha8Rng, spec: &FixtureSpec, target: &BoundingBox) -> (Tensor3, Tensor3) {
    let (k, u, v) = spec.tensor_dims;
    let (h, w) = spec.image_dims;
    let mut features = Vec::with_capacity(k * u * v);
    let mut gradients = Vec::with_capacity(k * u * v);
    for c in 0..k {
        for y in 0..u {
            for x in 0..v {
                let cx = (x as f64 + 0.5) * w as f64 / v as f64;
                let cy = (y as f64 + 0.5) * h as f64 / u as f64;
                let inside = cx >= target.x_min && cx <= target.x_max && cy >= target.y_min && cy <= target.y_max;
                let noise: f32 = rng.random_range(-1.0..1.0);
                if c == 0 {
                    features.push(if inside { 1.0 } else { 0.0 } + 0.1 * noise);
                    gradients.push(1.0 + 0.1 * rng.random_range(-1.0f32..1.0));
                } else {
                    features.push(noise);
                    gradients.push(0.1 * rng.random_range(-1.0f32..1.0));
                }
            }
        }
    }
    (
        Tensor3::new(k, u, v, features).expect("generated values are finite"),
        Tensor3::new(k, u, v, gradients).expect("generated values are finite"),
    )
}

pub fn generate(spec: &FixtureSpec, out_dir: &Path) -> Result<GeneratedFixture, FixtureError> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let (h, w) = spec.image_dims;
    let table = SimilarityTable::default_table(SimilarityMode::Grouped);

    mkdir(out_dir)?;
    mkdir(&out_dir.join("input"))?;

    let scenes: Vec<Scene> = (0..spec.n_images)
        .map(|i| {
            let class = spec.classes[rng.random_range(0..spec.classes.len())].clone();
            let id = format!("img_{i:03}");
            let primary = random_box(&mut rng, w, h, 4, 2);
            let mut objects = vec![GroundTruthObject {
                image_id: id.clone(),
                bbox: primary,
                label: class.clone(),
                primary: Some(true),
            }];
            if rng.random_bool(0.5) {
                let other = spec.classes[rng.random_range(0..spec.classes.len())].clone();
                objects.push(GroundTruthObject {
                    image_id: id.clone(),
                    bbox: random_box(&mut rng, w, h, 8, 4),
                    label: other,
                    primary: None,
                });
            }
            Scene {
                id,
                class,
                primary,
                objects,
            }
        })
        .collect();

    let gt = GroundTruthDoc {
        images: scenes
            .iter()
            .map(|s| ImageRecord {
                id: s.id.clone(),
                width: w,
                height: h,
                items: s.objects.clone(),
            })
            .collect(),
    };
    write(&out_dir.join("ground_truth.json"), io::write_ground_truth(&gt).as_bytes())?;
    for s in &scenes {
        let img = render_scene(&mut rng, s, w, h, 60);
        io::write_png(&out_dir.join("input").join(format!("{}.png", s.id)), &img)?;
    }

    let mut stages = Vec::with_capacity(spec.n_stages);
    for stage in 1..=spec.n_stages {
        let dir_name = format!("stage_{stage}");
        let dir = out_dir.join(&dir_name);
        mkdir(&dir.join("attention"))?;
        mkdir(&dir.join("restored"))?;

        let mut order: Vec<usize> = (0..scenes.len()).collect();
        order.shuffle(&mut rng);
        let correct: Vec<bool> = match &spec.phi_targets {
            Some(t) => {
                let count = (t[stage - 1] * scenes.len() as f64).round() as usize;
                let mut flags = vec![false; scenes.len()];
                for &i in &order[..count] {
                    flags[i] = true;
                }
                flags
            }
            None => {
                let p = stage as f64 / (spec.n_stages + 1) as f64;
                (0..scenes.len()).map(|_| rng.random_bool(p)).collect()
            }
        };

        let mut images = Vec::with_capacity(scenes.len());
        for (s, &ok) in scenes.iter().zip(&correct) {
            let (label, prob) = if ok {
                let group = Label::new(&s.class)
                    .ok()
                    .and_then(|l| table.groups().iter().find(|g| g.head == l).cloned());
                let label = match group {
                    Some(g) => g.members[rng.random_range(0..g.members.len())].as_str().to_string(),
                    None => s.class.clone(),
                };
                let prob = if spec.phi_targets.is_some() { 1.0 } else { rng.random_range(0.5..=1.0) };
                (label, prob)
            } else {
                let others: Vec<&String> = spec.classes.iter().filter(|c| **c != s.class).collect();
                let label = if others.is_empty() {
                    "zebra".to_string()
                } else {
                    others[rng.random_range(0..others.len())].clone()
                };
                (label, rng.random_range(0.0..1.0))
            };
            let mut dets = vec![Detection {
                image_id: s.id.clone(),
                bbox: jitter(&mut rng, &s.primary, w, h),
                label,
                score: rng.random_range(0.3..=1.0),
                explain_prob: Some(prob),
            }];
            if rng.random_bool(0.5) {
                let label = spec.classes[rng.random_range(0..spec.classes.len())].clone();
                dets.push(Detection {
                    image_id: s.id.clone(),
                    bbox: random_box(&mut rng, w, h, 8, 4),
                    label,
                    score: rng.random_range(0.05..0.6),
                    explain_prob: Some(prob * 0.5),
                });
            }
            images.push(ImageRecord {
                id: s.id.clone(),
                width: w,
                height: h,
                items: dets,
            });

            let (features, gradients) = attention_tensors(&mut rng, spec, &s.primary);
            let att = dir.join("attention");
            io::write_tensor_file(&att.join(format!("{}.features.rxt", s.id)), &features)?;
            io::write_tensor_file(&att.join(format!("{}.gradients.rxt", s.id)), &gradients)?;

            let noise = (60 / (stage as i32 + 1)).max(2);
            let restored = render_scene(&mut rng, s, w, h, noise);
            io::write_png(&dir.join("restored").join(format!("{}.png", s.id)), &restored)?;
        }
        write(
            &dir.join("detections.json"),
            io::write_detections(&DetectionDoc { images }).as_bytes(),
        )?;

        let first = (stage as u32 - 1) * spec.epochs_per_stage + 1;
        stages.push(StageEntry {
            id: stage as u32,
            epoch_range: [first, first + spec.epochs_per_stage - 1],
            detections: PathBuf::from(format!("{dir_name}/detections.json")),
            ground_truth: PathBuf::from("ground_truth.json"),
            attention_dir: Some(PathBuf::from(format!("{dir_name}/attention"))),
            restored_dir: Some(PathBuf::from(format!("{dir_name}/restored"))),
            input_dir: Some(PathBuf::from("input")),
        });
    }

    let manifest = StageManifest { stages };
    let manifest_path = out_dir.join("manifest.json");
    write(&manifest_path, io::write_manifest(&manifest).as_bytes())?;
    let similarity_path = out_dir.join("similarity.json");
    write(&similarity_path, table.to_json().as_bytes())?;
    let policy_path = out_dir.join("policy.json");
    let mut policy = serde_json::to_string_pretty(&GuidancePolicy::default()).expect("policy serializes");
    policy.push('\n');
    write(&policy_path, policy.as_bytes())?;

    Ok(GeneratedFixture {
        manifest_path,
        manifest,
        similarity_path,
        policy_path,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn spec_validation() {
        let bad = [
            FixtureSpec {
                n_images: 0,
                ..Default::default()
            },
            FixtureSpec {
                classes: vec![],
                ..Default::default()
            },
            FixtureSpec {
                phi_targets: Some(vec![0.5]),
                ..Default::default()
            },
            FixtureSpec {
                n_stages: 1,
                phi_targets: Some(vec![1.5]),
                ..Default::default()
            },
            FixtureSpec {
                tensor_dims: (2, 64, 8),
                ..Default::default()
            },
        ];
        for spec in bad {
            assert!(matches!(spec.validate(), Err(FixtureError::Invalid(_))), "{spec:?}");
        }
        assert!(FixtureSpec::default().validate().is_ok());
    }
}
