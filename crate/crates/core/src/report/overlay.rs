use image::{Rgb, RgbImage};

use super::ReportError;
use crate::gradcam::HeatMap;

/// Piecewise-linear blue → green → red. Breakpoints: 0 is (0, 0, 255),
/// 0.5 is (0, 255, 0), 1 is (255, 0, 0). Input is clamped to `[0, 1]`.
pub fn colormap(t: f64) -> [f64; 3] {
    let t = t.clamp(0.0, 1.0);
    if t <= 0.5 {
        [0.0, 510.0 * t, 255.0 - 510.0 * t]
    } else {
        [510.0 * t - 255.0, 510.0 - 510.0 * t, 0.0]
    }
}

/// `(1 − alpha) · image + alpha · colormap(heat)` per channel, rounded half up.
pub fn render_overlay(image: &RgbImage, heat: &HeatMap, alpha: f64) -> Result<RgbImage, ReportError> {
    if !(0.0..=1.0).contains(&alpha) {
        return Err(ReportError::BadAlpha(alpha));
    }
    let (w, h) = image.dimensions();
    if (heat.height, heat.width) != (h as usize, w as usize) {
        return Err(ReportError::DimMismatch {
            heat: (heat.height, heat.width),
            image: (h as usize, w as usize),
        });
    }
    Ok(RgbImage::from_fn(w, h, |x, y| {
        let src = image.get_pixel(x, y).0;
        let c = colormap(heat.get(y as usize, x as usize));
        let mut px = [0u8; 3];
        for ch in 0..3 {
            let v = (1.0 - alpha) * src[ch] as f64 + alpha * c[ch];
            px[ch] = (v + 0.5).floor().clamp(0.0, 255.0) as u8;
        }
        Rgb(px)
    }))
}
