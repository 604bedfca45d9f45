//! Peak signal-to-noise ratio over 8-bit RGB, all channels pooled.
//!
//! Included as the pixel-fidelity baseline that detection usefulness is
//! compared against.

use std::fmt;

use image::RgbImage;
use serde::{Serialize, Serializer};

use super::EvalError;

/// PSNR in decibels; infinite for identical images.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Psnr(pub f64);

impl Psnr {
    pub fn is_infinite(&self) -> bool {
        self.0.is_infinite()
    }
}

impl fmt::Display for Psnr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0.is_infinite() {
            f.write_str("inf")
        } else {
            write!(f, "{:.4}", self.0)
        }
    }
}

/// Infinite values serialize as the string `"inf"`.
impl Serialize for Psnr {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        if self.0.is_infinite() {
            s.serialize_str("inf")
        } else {
            s.serialize_f64(self.0)
        }
    }
}

pub fn psnr(a: &RgbImage, b: &RgbImage) -> Result<Psnr, EvalError> {
    if a.dimensions() != b.dimensions() {
        return Err(EvalError::DimMismatch {
            a: a.dimensions(),
            b: b.dimensions(),
        });
    }
    let sse: u64 = a
        .as_raw()
        .iter()
        .zip(b.as_raw())
        .map(|(&x, &y)| {
            let d = x.abs_diff(y) as u64;
            d * d
        })
        .sum();
    if sse == 0 {
        return Ok(Psnr(f64::INFINITY));
    }
    let mse = sse as f64 / a.as_raw().len() as f64;
    Ok(Psnr(10.0 * (255.0f64 * 255.0 / mse).log10()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use image::Rgb;

    #[test]
    fn closed_forms() {
        let grey = RgbImage::from_pixel(4, 3, Rgb([100, 120, 140]));
        let p = psnr(&grey, &grey).unwrap();
        assert!(p.is_infinite());
        assert_eq!(p.to_string(), "inf");
        assert_eq!(serde_json::to_string(&p).unwrap(), "\"inf\"");

        let plus1 = RgbImage::from_pixel(4, 3, Rgb([101, 121, 141]));
        let p = psnr(&grey, &plus1).unwrap().0;
        assert!((p - 20.0 * 255f64.log10()).abs() < 1e-12);
        assert!((p - 48.1308).abs() < 1e-3);

        let black = RgbImage::from_pixel(2, 2, Rgb([0, 0, 0]));
        let white = RgbImage::from_pixel(2, 2, Rgb([255, 255, 255]));
        assert_eq!(psnr(&black, &white).unwrap().0, 0.0);
    }

    #[test]
    fn dimension_mismatch() {
        let a = RgbImage::new(2, 2);
        let b = RgbImage::new(2, 3);
        assert_eq!(psnr(&a, &b), Err(EvalError::DimMismatch { a: (2, 2), b: (2, 3) }));
    }
}
