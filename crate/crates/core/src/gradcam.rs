//! Grad-CAM localization maps from exported activations and gradients.
//!
//! The exporter supplies, for one target class `c` and one convolutional
//! layer, the activations `A` (`k × u × v`) and the gradients of the
//! pre-softmax class score with respect to them (same shape). From those:
//!
//! 1. each channel's weight is the spatial mean of its gradient plane;
//! 2. the map is the weight-combined activations, clamped at zero.
//!
//! The coarse map can then be max-normalized, upsampled to image resolution
//! and scored against ground-truth boxes.

use rayon::prelude::*;
use thiserror::Error;

use crate::io::{BoundingBox, Tensor3};

#[derive(Debug, Error, PartialEq)]
pub enum GradcamError {
    #[error("{weights} weights for {channels} feature channels")]
    ChannelMismatch { weights: usize, channels: usize },
    #[error("features are {features:?} but gradients are {gradients:?}")]
    ShapeMismatch {
        features: (usize, usize, usize),
        gradients: (usize, usize, usize),
    },
    #[error("cannot upsample {from:?} to smaller {to:?}")]
    ShrinkUnsupported { from: (usize, usize), to: (usize, usize) },
    #[error("box {bbox:?} outside {width}x{height} map")]
    BoxOutOfBounds { bbox: [f64; 4], width: usize, height: usize },
}

/// Per-channel importance weights.
#[derive(Debug, Clone, PartialEq)]
pub struct NeuronWeights(pub Vec<f64>);

impl NeuronWeights {
    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn scaled(&self, s: f64) -> Self {
        NeuronWeights(self.0.iter().map(|w| w * s).collect())
    }
}

/// Non-negative coarse localization map, `height × width`, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct CamMap {
    pub height: usize,
    pub width: usize,
    pub values: Vec<f64>,
}

impl CamMap {
    pub fn max(&self) -> f64 {
        self.values.iter().copied().fold(0.0, f64::max)
    }

    /// As a single-channel tensor, for writing to disk.
    pub fn to_tensor(&self) -> Tensor3 {
        let data = self.values.iter().map(|&v| v as f32).collect();
        Tensor3::new(1, self.height, self.width, data).expect("cam values are finite and dims positive")
    }
}

/// Map with values in `[0, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct HeatMap {
    pub height: usize,
    pub width: usize,
    pub values: Vec<f64>,
    /// Set when the source map had no positive mass.
    pub is_blank: bool,
}

impl HeatMap {
    pub fn get(&self, y: usize, x: usize) -> f64 {
        self.values[y * self.width + x]
    }

    pub fn uniform(height: usize, width: usize, value: f64) -> Self {
        HeatMap {
            height,
            width,
            values: vec![value; height * width],
            is_blank: value == 0.0,
        }
    }
}

/// Spatial mean of each gradient plane.
pub fn neuron_weights(gradients: &Tensor3) -> NeuronWeights {
    let n = (gradients.height() * gradients.width()) as f64;
    NeuronWeights(
        gradients
            .channel_planes()
            .map(|plane| plane.iter().map(|&g| g as f64).sum::<f64>() / n)
            .collect(),
    )
}

/// Weighted channel sum before the ReLU.
pub fn weighted_combination(features: &Tensor3, weights: &NeuronWeights) -> Result<Vec<f64>, GradcamError> {
    if weights.len() != features.channels() {
        return Err(GradcamError::ChannelMismatch {
            weights: weights.len(),
            channels: features.channels(),
        });
    }
    let mut acc = vec![0.0f64; features.height() * features.width()];
    for (plane, &w) in features.channel_planes().zip(&weights.0) {
        for (a, &f) in acc.iter_mut().zip(plane) {
            *a += w * f as f64;
        }
    }
    Ok(acc)
}

pub fn cam(features: &Tensor3, weights: &NeuronWeights) -> Result<CamMap, GradcamError> {
    let values = weighted_combination(features, weights)?
        .into_iter()
        .map(|v| v.max(0.0))
        .collect();
    Ok(CamMap {
        height: features.height(),
        width: features.width(),
        values,
    })
}

/// Weights from `gradients`, then the map over `features`.
pub fn gradcam(features: &Tensor3, gradients: &Tensor3) -> Result<CamMap, GradcamError> {
    if features.dims() != gradients.dims() {
        return Err(GradcamError::ShapeMismatch {
            features: features.dims(),
            gradients: gradients.dims(),
        });
    }
    cam(features, &neuron_weights(gradients))
}

/// Grad-CAM for many `(features, gradients)` pairs on the current rayon pool.
/// Output order matches input order.
pub fn gradcam_batch(pairs: &[(Tensor3, Tensor3)]) -> Vec<Result<CamMap, GradcamError>> {
    pairs.par_iter().map(|(f, g)| gradcam(f, g)).collect()
}

/// Divides by the maximum. An all-zero map stays zero and is flagged blank.
pub fn normalize(map: &CamMap) -> HeatMap {
    let max = map.max();
    let (values, is_blank) = if max > 0.0 {
        (map.values.iter().map(|v| v / max).collect(), false)
    } else {
        (vec![0.0; map.values.len()], true)
    };
    HeatMap {
        height: map.height,
        width: map.width,
        values,
        is_blank,
    }
}

impl From<&HeatMap> for CamMap {
    fn from(h: &HeatMap) -> Self {
        CamMap {
            height: h.height,
            width: h.width,
            values: h.values.clone(),
        }
    }
}

/// Source coordinate and blend weight for each destination index along one axis.
fn axis_samples(src: usize, dst: usize) -> Vec<(usize, usize, f64)> {
    let scale = src as f64 / dst as f64;
    let last = (src - 1) as f64;
    (0..dst)
        .map(|i| {
            let pos = ((i as f64 + 0.5) * scale - 0.5).clamp(0.0, last);
            let lo = pos.floor() as usize;
            let hi = (lo + 1).min(src - 1);
            (lo, hi, pos - lo as f64)
        })
        .collect()
}

/// Bilinear upsampling with pixel-center alignment: destination pixel `i`
/// samples source position `(i + 0.5) * src / dst - 0.5`, clamped to the
/// source extent.
pub fn upsample(map: &HeatMap, height: usize, width: usize) -> Result<HeatMap, GradcamError> {
    if height < map.height || width < map.width {
        return Err(GradcamError::ShrinkUnsupported {
            from: (map.height, map.width),
            to: (height, width),
        });
    }
    if height == map.height && width == map.width {
        return Ok(map.clone());
    }
    let rows = axis_samples(map.height, height);
    let cols = axis_samples(map.width, width);
    let mut values = Vec::with_capacity(height * width);
    for &(y0, y1, wy) in &rows {
        for &(x0, x1, wx) in &cols {
            let top = map.get(y0, x0) * (1.0 - wx) + map.get(y0, x1) * wx;
            let bottom = map.get(y1, x0) * (1.0 - wx) + map.get(y1, x1) * wx;
            values.push((top * (1.0 - wy) + bottom * wy).clamp(0.0, 1.0));
        }
    }
    Ok(HeatMap {
        height,
        width,
        values,
        is_blank: map.is_blank,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AttentionFraction {
    pub fraction: f64,
    pub is_blank: bool,
}

/// Inclusive range of pixel indices whose centers `i + 0.5` lie in `[lo, hi]`.
fn covered(lo: f64, hi: f64, n: usize) -> std::ops::Range<usize> {
    let start = (lo - 0.5).ceil().max(0.0) as usize;
    let end = ((hi - 0.5).floor() + 1.0).max(0.0) as usize;
    start.min(n)..end.min(n)
}

/// Share of total heat whose pixel centers fall inside the union of `boxes`.
pub fn attention_in_box(map: &HeatMap, boxes: &[BoundingBox]) -> Result<AttentionFraction, GradcamError> {
    for b in boxes {
        if b.x_max > map.width as f64 || b.y_max > map.height as f64 {
            return Err(GradcamError::BoxOutOfBounds {
                bbox: b.corners(),
                width: map.width,
                height: map.height,
            });
        }
    }
    let total: f64 = map.values.iter().sum();
    if total <= 0.0 {
        return Ok(AttentionFraction {
            fraction: 0.0,
            is_blank: true,
        });
    }
    let mut inside = vec![false; map.values.len()];
    for b in boxes {
        let xs = covered(b.x_min, b.x_max, map.width);
        for y in covered(b.y_min, b.y_max, map.height) {
            inside[y * map.width + xs.start..y * map.width + xs.end.max(xs.start)].fill(true);
        }
    }
    let hit: f64 = map.values.iter().zip(&inside).filter(|(_, &m)| m).map(|(v, _)| v).sum();
    Ok(AttentionFraction {
        fraction: (hit / total).clamp(0.0, 1.0),
        is_blank: false,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn t(k: usize, u: usize, v: usize, data: &[f32]) -> Tensor3 {
        Tensor3::new(k, u, v, data.to_vec()).unwrap()
    }

    #[test]
    fn weights_are_plane_means() {
        let g = Tensor3::filled(3, 4, 5, 1.0).unwrap();
        assert_eq!(neuron_weights(&g).0, vec![1.0; 3]);
        assert_eq!(neuron_weights(&t(1, 2, 2, &[1.0, 2.0, 3.0, 4.0])).0, vec![2.5]);
    }

    #[test]
    fn cam_examples() {
        let f = t(1, 2, 2, &[0.0, 1.5, 3.0, 0.25]);
        assert_eq!(cam(&f, &NeuronWeights(vec![1.0])).unwrap().values, vec![0.0, 1.5, 3.0, 0.25]);
        assert!(cam(&f, &NeuronWeights(vec![-1.0])).unwrap().values.iter().all(|&v| v == 0.0));

        // 0.5*[1,-1,0,2] + 2*[1,1,1,-3]
        let f = t(2, 2, 2, &[1.0, -1.0, 0.0, 2.0, 1.0, 1.0, 1.0, -3.0]);
        let m = cam(&f, &NeuronWeights(vec![0.5, 2.0])).unwrap();
        assert_eq!(m.values, vec![2.5, 1.5, 2.0, 0.0]);
        assert_eq!((m.height, m.width), (2, 2));

        assert_eq!(
            cam(&f, &NeuronWeights(vec![1.0])),
            Err(GradcamError::ChannelMismatch { weights: 1, channels: 2 })
        );
    }

    #[test]
    fn gradcam_shape_check() {
        let f = Tensor3::filled(2, 2, 2, 1.0).unwrap();
        let g = Tensor3::filled(2, 2, 3, 1.0).unwrap();
        assert!(matches!(gradcam(&f, &g), Err(GradcamError::ShapeMismatch { .. })));
    }

    #[test]
    fn normalize_examples() {
        let m = CamMap {
            height: 2,
            width: 2,
            values: vec![0.0, 2.0, 4.0, 1.0],
        };
        let h = normalize(&m);
        assert_eq!(h.values, vec![0.0, 0.5, 1.0, 0.25]);
        assert!(!h.is_blank);
        let z = normalize(&CamMap {
            height: 1,
            width: 3,
            values: vec![0.0; 3],
        });
        assert!(z.is_blank);
        assert_eq!(z.values, vec![0.0; 3]);
    }

    #[test]
    fn upsample_examples() {
        let h = HeatMap {
            height: 2,
            width: 2,
            values: vec![0.0, 1.0, 1.0, 0.0],
            is_blank: false,
        };
        assert_eq!(upsample(&h, 2, 2).unwrap(), h);
        let c = upsample(&HeatMap::uniform(1, 1, 0.7), 5, 3).unwrap();
        assert!(c.values.iter().all(|&v| v == 0.7));
        assert_eq!(
            upsample(&h, 1, 4),
            Err(GradcamError::ShrinkUnsupported { from: (2, 2), to: (1, 4) })
        );

        // positions for 2 -> 4: 0 (clamped), 0.25, 0.75, 1 (clamped)
        let up = upsample(&h, 4, 4).unwrap();
        assert_eq!(up.get(0, 0), 0.0);
        assert_eq!(up.get(0, 3), 1.0);
        assert!((up.get(1, 1) - (0.75 * 0.25 + 0.25 * 0.75)).abs() < 1e-12);
        assert!((up.get(1, 2) - (0.75 * 0.75 + 0.25 * 0.25)).abs() < 1e-12);
    }

    #[test]
    fn attention_examples() {
        let h = HeatMap::uniform(8, 8, 1.0);
        let whole = BoundingBox::new(0.0, 0.0, 8.0, 8.0).unwrap();
        assert_eq!(attention_in_box(&h, &[whole]).unwrap().fraction, 1.0);
        let quarter = BoundingBox::new(0.0, 0.0, 4.0, 4.0).unwrap();
        assert!((attention_in_box(&h, &[quarter]).unwrap().fraction - 0.25).abs() < 1e-6);
        let blank = attention_in_box(&HeatMap::uniform(4, 4, 0.0), &[quarter]).unwrap();
        assert!(blank.is_blank);
        assert_eq!(blank.fraction, 0.0);
        let outside = BoundingBox::new(0.0, 0.0, 9.0, 4.0).unwrap();
        assert!(matches!(attention_in_box(&h, &[outside]), Err(GradcamError::BoxOutOfBounds { .. })));
        // box too thin to contain any pixel center
        let sliver = BoundingBox::new(2.6, 2.6, 3.4, 3.4).unwrap();
        assert_eq!(attention_in_box(&h, &[sliver]).unwrap().fraction, 0.0);
    }

    fn small_tensor() -> impl Strategy<Value = Tensor3> {
        (1usize..=4, 1usize..=6, 1usize..=6).prop_flat_map(|(k, u, v)| {
            proptest::collection::vec(-2.0f32..2.0, k * u * v)
                .prop_map(move |d| Tensor3::new(k, u, v, d).unwrap())
        })
    }

    proptest! {
        #[test]
        fn linear_before_relu(f in small_tensor(), s in 0.01f64..10.0) {
            let w = NeuronWeights((0..f.channels()).map(|c| c as f64 - 1.5).collect());
            let base = weighted_combination(&f, &w).unwrap();
            let scaled = weighted_combination(&f, &w.scaled(s)).unwrap();
            for (a, b) in base.iter().zip(&scaled) {
                prop_assert!((a * s - b).abs() <= 1e-9 * (1.0 + b.abs()));
            }
            // when nothing is clamped the post-ReLU map scales too
            let pos = NeuronWeights(vec![1.0; f.channels()]);
            let abs = Tensor3::new(f.channels(), f.height(), f.width(), f.data().iter().map(|v| v.abs()).collect()).unwrap();
            let m = cam(&abs, &pos).unwrap();
            let ms = cam(&abs, &pos.scaled(s)).unwrap();
            for (a, b) in m.values.iter().zip(&ms.values) {
                prop_assert!((a * s - b).abs() <= 1e-9 * (1.0 + b.abs()));
            }
        }

        #[test]
        fn normalize_is_idempotent(vals in proptest::collection::vec(0.0f64..5.0, 1..50)) {
            let m = CamMap { height: 1, width: vals.len(), values: vals };
            let once = normalize(&m);
            let twice = normalize(&CamMap::from(&once));
            let max = once.values.iter().copied().fold(0.0, f64::max);
            prop_assert!(max == 0.0 || max == 1.0);
            prop_assert_eq!(once, twice);
        }

        #[test]
        fn upsampled_values_stay_in_unit_interval(
            vals in proptest::collection::vec(0.0f64..=1.0, 6),
            dh in 0usize..6,
            dw in 0usize..6,
        ) {
            let h = HeatMap { height: 2, width: 3, values: vals, is_blank: false };
            let up = upsample(&h, 2 + dh, 3 + dw).unwrap();
            prop_assert!(up.values.iter().all(|v| (0.0..=1.0).contains(v)));
        }

        #[test]
        fn adding_a_box_never_lowers_attention(
            vals in proptest::collection::vec(0.0f64..1.0, 64),
            a in (0.0f64..7.0, 0.0f64..7.0, 0.5f64..4.0, 0.5f64..4.0),
            b in (0.0f64..7.0, 0.0f64..7.0, 0.5f64..4.0, 0.5f64..4.0),
        ) {
            let h = HeatMap { height: 8, width: 8, values: vals, is_blank: false };
            let mk = |(x, y, w, hh): (f64, f64, f64, f64)| {
                BoundingBox::new(x, y, (x + w).min(8.0), (y + hh).min(8.0)).unwrap()
            };
            let one = attention_in_box(&h, &[mk(a)]).unwrap().fraction;
            let two = attention_in_box(&h, &[mk(a), mk(b)]).unwrap().fraction;
            prop_assert!(two >= one);
        }
    }
}
