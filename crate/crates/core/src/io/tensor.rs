//! `RXT1` dense tensor files.
//!
//! Layout (all little-endian):
//!
//! ```text
//! "RXT1"            4 bytes magic
//! ndim: u32         must be 3
//! k, u, v: u32 x3   channels, height, width
//! data: f32 x k*u*v row-major, width fastest
//! ```

use std::path::Path;

use super::ArtifactError;

pub const TENSOR_MAGIC: &[u8; 4] = b"RXT1";
const HEADER_LEN: usize = 4 + 4 + 12;

/// Dense `channels × height × width` tensor of finite `f32` values.
#[derive(Debug, Clone, PartialEq)]
pub struct Tensor3 {
    channels: usize,
    height: usize,
    width: usize,
    data: Vec<f32>,
}

impl Tensor3 {
    pub fn new(channels: usize, height: usize, width: usize, data: Vec<f32>) -> Result<Self, ArtifactError> {
        if channels == 0 || height == 0 || width == 0 {
            return Err(ArtifactError::ZeroDim(channels as u32, height as u32, width as u32));
        }
        let expected = channels as u128 * height as u128 * width as u128;
        if data.len() as u128 != expected {
            return Err(ArtifactError::DimMismatch {
                expected: expected * 4,
                actual: data.len() as u128 * 4,
            });
        }
        if let Some(i) = data.iter().position(|v| !v.is_finite()) {
            return Err(ArtifactError::NonFinite(i));
        }
        Ok(Tensor3 {
            channels,
            height,
            width,
            data,
        })
    }

    pub fn filled(channels: usize, height: usize, width: usize, value: f32) -> Result<Self, ArtifactError> {
        Self::new(channels, height, width, vec![value; channels * height * width])
    }

    pub fn channels(&self) -> usize {
        self.channels
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn dims(&self) -> (usize, usize, usize) {
        (self.channels, self.height, self.width)
    }

    pub fn data(&self) -> &[f32] {
        &self.data
    }

    pub fn get(&self, c: usize, y: usize, x: usize) -> f32 {
        self.data[(c * self.height + y) * self.width + x]
    }

    /// One `height × width` plane.
    pub fn channel(&self, c: usize) -> &[f32] {
        let plane = self.height * self.width;
        &self.data[c * plane..(c + 1) * plane]
    }

    pub fn channel_planes(&self) -> std::slice::ChunksExact<'_, f32> {
        self.data.chunks_exact(self.height * self.width)
    }
}

fn read_u32(bytes: &[u8], at: usize) -> u32 {
    u32::from_le_bytes(bytes[at..at + 4].try_into().unwrap())
}

pub fn parse_tensor(bytes: &[u8]) -> Result<Tensor3, ArtifactError> {
    if bytes.len() < 4 || &bytes[..4] != TENSOR_MAGIC {
        return Err(ArtifactError::BadMagic);
    }
    if bytes.len() < 8 {
        return Err(ArtifactError::Truncated(bytes.len()));
    }
    let ndim = read_u32(bytes, 4);
    if ndim != 3 {
        return Err(ArtifactError::NdimUnsupported(ndim));
    }
    if bytes.len() < HEADER_LEN {
        return Err(ArtifactError::Truncated(bytes.len()));
    }
    let (k, u, v) = (read_u32(bytes, 8), read_u32(bytes, 12), read_u32(bytes, 16));
    if k == 0 || u == 0 || v == 0 {
        return Err(ArtifactError::ZeroDim(k, u, v));
    }
    let payload = &bytes[HEADER_LEN..];
    let expected = k as u128 * u as u128 * v as u128 * 4;
    if payload.len() as u128 != expected {
        return Err(ArtifactError::DimMismatch {
            expected,
            actual: payload.len() as u128,
        });
    }
    let data: Vec<f32> = payload
        .chunks_exact(4)
        .map(|c| f32::from_le_bytes(c.try_into().unwrap()))
        .collect();
    Tensor3::new(k as usize, u as usize, v as usize, data)
}

pub fn write_tensor(t: &Tensor3) -> Vec<u8> {
    let mut out = Vec::with_capacity(HEADER_LEN + t.data.len() * 4);
    out.extend_from_slice(TENSOR_MAGIC);
    out.extend_from_slice(&3u32.to_le_bytes());
    for d in [t.channels, t.height, t.width] {
        out.extend_from_slice(&(d as u32).to_le_bytes());
    }
    for v in &t.data {
        out.extend_from_slice(&v.to_le_bytes());
    }
    out
}

pub fn read_tensor(path: &Path) -> Result<Tensor3, ArtifactError> {
    let bytes = std::fs::read(path).map_err(|e| ArtifactError::io(path, e))?;
    parse_tensor(&bytes)
}

pub fn write_tensor_file(path: &Path, t: &Tensor3) -> Result<(), ArtifactError> {
    std::fs::write(path, write_tensor(t)).map_err(|e| ArtifactError::io(path, e))
}
