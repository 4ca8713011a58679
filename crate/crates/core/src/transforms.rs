//! Scale jittering with horizontal flip, crop and pad.
//!
//! The geometry is fixed as scale → flip → crop/pad. A source image of
//! `h × w` is resized to `round(h·s) × round(w·s)`, mirrored when the flip
//! flag is set, then placed on the target canvas: dimensions larger than the
//! target are cropped at `crop_offset`, smaller ones are padded with
//! `pad_value` (anchored top-left unless random placement is enabled).
//!
//! Pixels are resampled bilinearly, masks with nearest neighbour so they
//! stay binary.

use image::{Rgb, RgbImage};
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::annotations::{Bitmap, InstanceAnnotation};
use crate::{Error, Result};

pub const SSJ_RANGE: (f64, f64) = (0.8, 1.25);
pub const LSJ_RANGE: (f64, f64) = (0.1, 2.0);
pub const DEFAULT_PAD_VALUE: [u8; 3] = [128, 128, 128];

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum JitterMode {
    /// Standard scale jittering, scale uniform in [0.8, 1.25].
    Ssj,
    /// Large scale jittering, scale uniform in [0.1, 2.0].
    Lsj,
    Fixed { scale: f64 },
    /// Custom closed range.
    Range { min: f64, max: f64 },
}

impl JitterMode {
    /// Closed scale range `(min, max)`.
    pub fn range(&self) -> (f64, f64) {
        match *self {
            JitterMode::Ssj => SSJ_RANGE,
            JitterMode::Lsj => LSJ_RANGE,
            JitterMode::Fixed { scale } => (scale, scale),
            JitterMode::Range { min, max } => (min, max),
        }
    }

    pub fn validate(&self) -> std::result::Result<(), String> {
        let (lo, hi) = self.range();
        if !(lo.is_finite() && hi.is_finite()) || lo <= 0.0 {
            return Err(format!("scale range [{lo}, {hi}] must be positive and finite"));
        }
        if lo > hi {
            return Err(format!("scale range [{lo}, {hi}] is inverted"));
        }
        Ok(())
    }

    pub fn sample_scale<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        let (lo, hi) = self.range();
        if lo == hi {
            lo
        } else {
            rng.random_range(lo..=hi)
        }
    }
}

/// Where a scaled image smaller than the canvas is placed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PadAnchor {
    #[default]
    TopLeft,
    Random,
}

/// Output canvas shared by every sample of a run.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Canvas {
    pub height: u32,
    pub width: u32,
    pub pad_value: [u8; 3],
    pub anchor: PadAnchor,
}

impl Canvas {
    pub fn new(height: u32, width: u32) -> Self {
        Canvas {
            height,
            width,
            pad_value: DEFAULT_PAD_VALUE,
            anchor: PadAnchor::TopLeft,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TransformParams {
    pub scale: f64,
    pub flip: bool,
    /// `(dx, dy)` of the crop window inside the scaled (and flipped) image.
    pub crop_offset: (u32, u32),
    /// `(dx, dy)` of the scaled image on the canvas when it is smaller.
    pub pad_offset: (u32, u32),
    /// Canvas `(H, W)`.
    pub target: (u32, u32),
    /// Scaled image `(h, w)`.
    pub scaled: (u32, u32),
    pub pad_value: [u8; 3],
}

impl TransformParams {
    /// Parameters that reproduce the source unchanged (source size == canvas size).
    pub fn identity(height: u32, width: u32) -> Self {
        TransformParams {
            scale: 1.0,
            flip: false,
            crop_offset: (0, 0),
            pad_offset: (0, 0),
            target: (height, width),
            scaled: (height, width),
            pad_value: DEFAULT_PAD_VALUE,
        }
    }

    /// Derives the scaled size and offsets for an explicit scale and flip.
    /// Crop/pad offsets are zero (top-left).
    pub fn fixed(scale: f64, flip: bool, src: (u32, u32), canvas: &Canvas) -> Self {
        TransformParams {
            scale,
            flip,
            crop_offset: (0, 0),
            pad_offset: (0, 0),
            target: (canvas.height, canvas.width),
            scaled: scaled_size(src, scale),
            pad_value: canvas.pad_value,
        }
    }
}

fn scaled_size(src: (u32, u32), scale: f64) -> (u32, u32) {
    let dim = |v: u32| ((v as f64 * scale).round() as u32).max(1);
    (dim(src.0), dim(src.1))
}

/// Draws jitter parameters for a source of size `src = (h, w)`.
///
/// Draw order is fixed (scale, flip, crop y, crop x, pad y, pad x) so equal
/// generator states give equal parameters.
pub fn sample_params<R: Rng + ?Sized>(
    mode: JitterMode,
    canvas: &Canvas,
    src: (u32, u32),
    rng: &mut R,
) -> TransformParams {
    let scale = mode.sample_scale(rng);
    let flip = rng.random_bool(0.5);
    let scaled = scaled_size(src, scale);
    let (th, tw) = (canvas.height, canvas.width);
    let mut offset = |scaled: u32, target: u32, random_pad: bool| -> (u32, u32) {
        if scaled > target {
            (rng.random_range(0..=scaled - target), 0)
        } else if scaled < target && random_pad {
            (0, rng.random_range(0..=target - scaled))
        } else {
            (0, 0)
        }
    };
    let random_pad = canvas.anchor == PadAnchor::Random;
    let (crop_y, pad_y) = offset(scaled.0, th, random_pad);
    let (crop_x, pad_x) = offset(scaled.1, tw, random_pad);
    TransformParams {
        scale,
        flip,
        crop_offset: (crop_x, crop_y),
        pad_offset: (pad_x, pad_y),
        target: (th, tw),
        scaled,
        pad_value: canvas.pad_value,
    }
}

/// An image and its instances after jittering, in canvas coordinates.
#[derive(Debug, Clone)]
pub struct TransformedSample {
    pub image: RgbImage,
    /// Bitmap masks of canvas shape; instances with no visible pixel are gone.
    pub annotations: Vec<InstanceAnnotation>,
    pub params: TransformParams,
    pub source_image_id: u64,
    /// Ids dropped because the crop left too few visible pixels.
    pub cropped_out: Vec<u64>,
}

impl TransformedSample {
    pub fn shape(&self) -> (u32, u32) {
        (self.image.height(), self.image.width())
    }

    /// Wraps an image whose annotations already are canvas-sized bitmaps.
    pub fn untransformed(image: RgbImage, annotations: Vec<InstanceAnnotation>, id: u64) -> Result<Self> {
        let (w, h) = image.dimensions();
        let annotations = annotations
            .into_iter()
            .map(|mut a| {
                let mask = std::mem::replace(&mut a.segmentation, crate::SegMask::Polygons(vec![]))
                    .into_bitmap(h, w)?;
                a.set_mask(mask);
                Ok(a)
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(TransformedSample {
            image,
            annotations,
            params: TransformParams::identity(h, w),
            source_image_id: id,
            cropped_out: Vec::new(),
        })
    }
}

/// Per canvas row (or column): the source index for nearest sampling and the
/// bilinear taps, or `None` for padding.
#[derive(Debug, Clone, Copy)]
struct Tap {
    nearest: u32,
    lo: u32,
    hi: u32,
    frac: f64,
}

fn axis_taps(target: u32, scaled: u32, src: u32, crop: u32, pad: u32, flip: bool) -> Vec<Option<Tap>> {
    let ratio = src as f64 / scaled as f64;
    (0..target)
        .map(|o| {
            if o < pad {
                return None;
            }
            let s = o - pad + crop;
            if s >= scaled {
                return None;
            }
            let s = if flip { scaled - 1 - s } else { s };
            let center = (s as f64 + 0.5) * ratio;
            // floor((s + 0.5) * src / scaled), exactly.
            let nearest = ((2 * s as u64 + 1) * src as u64 / (2 * scaled as u64)).min(src as u64 - 1) as u32;
            let coord = (center - 0.5).clamp(0.0, (src - 1) as f64);
            let lo = coord.floor() as u32;
            let hi = (lo + 1).min(src - 1);
            Some(Tap {
                nearest,
                lo,
                hi,
                frac: coord - lo as f64,
            })
        })
        .collect()
}

struct Geometry {
    rows: Vec<Option<Tap>>,
    cols: Vec<Option<Tap>>,
}

impl Geometry {
    fn new(params: &TransformParams, src: (u32, u32)) -> Self {
        let (th, tw) = params.target;
        let (sh, sw) = params.scaled;
        Geometry {
            rows: axis_taps(th, sh, src.0, params.crop_offset.1, params.pad_offset.1, false),
            cols: axis_taps(tw, sw, src.1, params.crop_offset.0, params.pad_offset.0, params.flip),
        }
    }

    fn warp_image(&self, image: &RgbImage, pad: [u8; 3]) -> RgbImage {
        let mut out = RgbImage::from_pixel(self.cols.len() as u32, self.rows.len() as u32, Rgb(pad));
        for (oy, row) in self.rows.iter().enumerate() {
            let Some(ry) = row else { continue };
            for (ox, col) in self.cols.iter().enumerate() {
                let Some(cx) = col else { continue };
                let p00 = image.get_pixel(cx.lo, ry.lo).0;
                let p01 = image.get_pixel(cx.hi, ry.lo).0;
                let p10 = image.get_pixel(cx.lo, ry.hi).0;
                let p11 = image.get_pixel(cx.hi, ry.hi).0;
                let mut px = [0u8; 3];
                for c in 0..3 {
                    let top = p00[c] as f64 * (1.0 - cx.frac) + p01[c] as f64 * cx.frac;
                    let bottom = p10[c] as f64 * (1.0 - cx.frac) + p11[c] as f64 * cx.frac;
                    let v = top * (1.0 - ry.frac) + bottom * ry.frac;
                    px[c] = v.round().clamp(0.0, 255.0) as u8;
                }
                out.put_pixel(ox as u32, oy as u32, Rgb(px));
            }
        }
        out
    }

    /// Nearest-neighbour warp that only visits canvas pixels whose source lies in
    /// the mask's bounding box.
    fn warp_mask(&self, mask: &Bitmap) -> Bitmap {
        let mut out = Bitmap::new(self.rows.len() as u32, self.cols.len() as u32);
        let bb = mask.tight_bbox();
        if bb.is_empty() {
            return out;
        }
        let (x0, y0) = (bb.x as u32, bb.y as u32);
        let (x1, y1) = (x0 + bb.w as u32, y0 + bb.h as u32);
        let rows: Vec<(u32, u32)> = self
            .rows
            .iter()
            .enumerate()
            .filter_map(|(o, t)| t.filter(|t| t.nearest >= y0 && t.nearest < y1).map(|t| (o as u32, t.nearest)))
            .collect();
        let cols: Vec<(u32, u32)> = self
            .cols
            .iter()
            .enumerate()
            .filter_map(|(o, t)| t.filter(|t| t.nearest >= x0 && t.nearest < x1).map(|t| (o as u32, t.nearest)))
            .collect();
        for &(oy, sy) in &rows {
            let src_row = mask.row(sy);
            for &(ox, sx) in &cols {
                if src_row[sx as usize] != 0 {
                    out.set(ox, oy, true);
                }
            }
        }
        out
    }
}

/// Applies `params` to an image and its annotations.
///
/// Masks are decoded at the source size, warped, and their bbox/area
/// recomputed. Instances with `min_visible_pixels` or fewer visible pixels
/// are dropped and listed in [`TransformedSample::cropped_out`].
pub fn apply(
    image: &RgbImage,
    annotations: &[InstanceAnnotation],
    params: &TransformParams,
    source_image_id: u64,
    min_visible_pixels: u64,
) -> Result<TransformedSample> {
    let (w, h) = image.dimensions();
    if w == 0 || h == 0 {
        return Err(Error::InvalidArgument("empty source image".into()));
    }
    let geometry = Geometry::new(params, (h, w));
    let out_image = geometry.warp_image(image, params.pad_value);

    let mut kept = Vec::with_capacity(annotations.len());
    let mut cropped_out = Vec::new();
    for a in annotations {
        let src_mask = a.segmentation.to_bitmap(h, w)?;
        let mask = geometry.warp_mask(&src_mask);
        if mask.area() <= min_visible_pixels {
            cropped_out.push(a.id);
            continue;
        }
        let mut out = a.clone();
        out.set_mask(mask);
        kept.push(out);
    }
    Ok(TransformedSample {
        image: out_image,
        annotations: kept,
        params: *params,
        source_image_id,
        cropped_out,
    })
}
