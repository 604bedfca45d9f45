//! Triple-loop Grad-CAM.

/// Computes the ReLU-clamped Grad-CAM map for a `k × u × v` feature stack.
///
/// `features` and `gradients` are row-major with width fastest. The result
/// has `u * v` cells in the same layout.
pub fn gradcam_naive(features: &[f32], gradients: &[f32], k: usize, u: usize, v: usize) -> Vec<f64> {
    assert_eq!(features.len(), k * u * v, "features length");
    assert_eq!(gradients.len(), k * u * v, "gradients length");

    let mut weights = vec![0.0f64; k];
    for c in 0..k {
        let mut total = 0.0f64;
        for y in 0..u {
            for x in 0..v {
                total += gradients[c * u * v + y * v + x] as f64;
            }
        }
        weights[c] = total / ((u * v) as f64);
    }

    let mut out = vec![0.0f64; u * v];
    for y in 0..u {
        for x in 0..v {
            let mut acc = 0.0f64;
            for c in 0..k {
                acc += weights[c] * features[c * u * v + y * v + x] as f64;
            }
            out[y * v + x] = if acc > 0.0 { acc } else { 0.0 };
        }
    }
    out
}
