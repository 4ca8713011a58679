use serde::{Deserialize, Serialize};

use crate::annotations::Bitmap;
use crate::{Error, Result};

/// Gaussian smoothing applied to the paste mask before compositing.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct BlendConfig {
    pub enabled: bool,
    /// Standard deviation in pixels.
    pub sigma: f64,
    pub kernel_radius: u32,
}

impl Default for BlendConfig {
    fn default() -> Self {
        BlendConfig {
            enabled: false,
            sigma: 1.0,
            kernel_radius: 2,
        }
    }
}

impl BlendConfig {
    pub fn gaussian(sigma: f64, kernel_radius: u32) -> Self {
        BlendConfig {
            enabled: true,
            sigma,
            kernel_radius,
        }
    }

    pub fn validate(&self) -> std::result::Result<(), String> {
        if self.enabled && !(self.sigma > 0.0 && self.sigma.is_finite()) {
            return Err(format!("sigma must be positive when blending, got {}", self.sigma));
        }
        Ok(())
    }

    /// Normalized 1-D kernel of length `2·radius + 1`.
    pub fn kernel(&self) -> Vec<f64> {
        let r = self.kernel_radius as i64;
        let two_s2 = 2.0 * self.sigma * self.sigma;
        let raw: Vec<f64> = (-r..=r).map(|i| (-((i * i) as f64) / two_s2).exp()).collect();
        let sum: f64 = raw.iter().sum();
        raw.into_iter().map(|v| v / sum).collect()
    }
}

/// Per-pixel paste weight in `[0, 1]`, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct AlphaMap {
    height: u32,
    width: u32,
    values: Vec<f32>,
}

impl AlphaMap {
    pub fn from_bitmap(b: &Bitmap) -> Self {
        AlphaMap {
            height: b.height(),
            width: b.width(),
            values: b.as_slice().iter().map(|&v| v as f32).collect(),
        }
    }

    pub fn shape(&self) -> (u32, u32) {
        (self.height, self.width)
    }

    #[inline]
    pub fn get(&self, x: u32, y: u32) -> f32 {
        self.values[y as usize * self.width as usize + x as usize]
    }

    pub fn values(&self) -> &[f32] {
        &self.values
    }

    /// Whether every value is exactly 0 or 1.
    pub fn is_binary(&self) -> bool {
        self.values.iter().all(|&v| v == 0.0 || v == 1.0)
    }

    /// Separable convolution with zero padding outside the frame, then clamped to [0, 1].
    fn blurred(&self, kernel: &[f64]) -> AlphaMap {
        let (h, w) = (self.height as usize, self.width as usize);
        let r = (kernel.len() / 2) as isize;
        let mut tmp = vec![0f64; h * w];
        for y in 0..h {
            let row = &self.values[y * w..(y + 1) * w];
            for x in 0..w {
                let mut acc = 0.0;
                for (k, kv) in kernel.iter().enumerate() {
                    let sx = x as isize + k as isize - r;
                    if sx >= 0 && (sx as usize) < w {
                        acc += kv * row[sx as usize] as f64;
                    }
                }
                tmp[y * w + x] = acc;
            }
        }
        let mut values = vec![0f32; h * w];
        for y in 0..h {
            for x in 0..w {
                let mut acc = 0.0;
                for (k, kv) in kernel.iter().enumerate() {
                    let sy = y as isize + k as isize - r;
                    if sy >= 0 && (sy as usize) < h {
                        acc += kv * tmp[sy as usize * w + x];
                    }
                }
                values[y * w + x] = acc.clamp(0.0, 1.0) as f32;
            }
        }
        AlphaMap {
            height: self.height,
            width: self.width,
            values,
        }
    }
}

/// Union of the masks as a binary bitmap of the given shape.
pub fn union_mask(masks: &[&Bitmap], height: u32, width: u32) -> Result<Bitmap> {
    let mut out = Bitmap::new(height, width);
    for m in masks {
        if m.shape() != (height, width) {
            return Err(Error::ShapeMismatch {
                expected: (height, width),
                actual: m.shape(),
            });
        }
        out.union_with(m)?;
    }
    Ok(out)
}

/// Paste weights from instance masks: their binary union, Gaussian-smoothed when
/// blending is enabled.
pub fn build_alpha(masks: &[&Bitmap], height: u32, width: u32, blend: &BlendConfig) -> Result<AlphaMap> {
    let binary = union_mask(masks, height, width)?;
    Ok(alpha_from_binary(&binary, blend))
}

pub(crate) fn alpha_from_binary(binary: &Bitmap, blend: &BlendConfig) -> AlphaMap {
    let alpha = AlphaMap::from_bitmap(binary);
    if blend.enabled {
        alpha.blurred(&blend.kernel())
    } else {
        alpha
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_list_is_zero() {
        let a = build_alpha(&[], 5, 6, &BlendConfig::gaussian(1.0, 2)).unwrap();
        assert!(a.values().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn no_blend_is_identity() {
        let m = Bitmap::from_rows(&["0110", "0010"]).unwrap();
        let a = build_alpha(&[&m], 2, 4, &BlendConfig::default()).unwrap();
        assert!(a.is_binary());
        assert_eq!(a.values(), &[0., 1., 1., 0., 0., 0., 1., 0.]);
    }

    #[test]
    fn kernel_is_normalized_and_symmetric() {
        let k = BlendConfig::gaussian(1.3, 3).kernel();
        assert_eq!(k.len(), 7);
        assert!((k.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        for i in 0..3 {
            assert_eq!(k[i], k[6 - i]);
        }
    }

    #[test]
    fn shape_mismatch() {
        let m = Bitmap::new(3, 3);
        assert!(matches!(
            build_alpha(&[&m], 4, 4, &BlendConfig::default()),
            Err(Error::ShapeMismatch { .. })
        ));
    }
}
