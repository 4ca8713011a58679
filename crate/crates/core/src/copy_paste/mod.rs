//! Instance compositing: pick instances from a source sample, paste them onto
//! a target sample, and repair the target's labels.
//!
//! The composite is `src × α + target × (1 − α)` where α is the union of the
//! pasted masks (optionally Gaussian-smoothed). Label geometry always uses the
//! binary α: every target mask becomes `mask ∧ ¬α`, and targets left without
//! visible pixels are removed. Pasted instances form a single top layer and
//! keep their source masks unchanged, even where they overlap each other.

mod alpha;
mod mixup;

use image::{Rgb, RgbImage};
use rand::seq::IndexedRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::annotations::{Bitmap, InstanceAnnotation};
use crate::transforms::TransformedSample;
use crate::{Error, Result};

pub use alpha::{build_alpha, union_mask, AlphaMap, BlendConfig};
pub use mixup::{mix_pixels, mixup, MixedSample, WeightedAnnotation};

/// Which source instances get pasted.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum PastePolicy {
    /// Keep each instance independently with probability `p`.
    RandomSubset { p: f64 },
    OneObject,
    AllObjects,
}

impl Default for PastePolicy {
    fn default() -> Self {
        PastePolicy::RandomSubset { p: 0.5 }
    }
}

impl PastePolicy {
    pub fn validate(&self) -> std::result::Result<(), String> {
        match *self {
            PastePolicy::RandomSubset { p } if !(0.0..=1.0).contains(&p) => {
                Err(format!("keep probability {p} outside [0, 1]"))
            }
            _ => Ok(()),
        }
    }
}

/// Indices into `src.annotations` chosen under `policy`. Crowd regions are never
/// eligible.
pub fn select_subset<R: Rng + ?Sized>(src: &TransformedSample, policy: PastePolicy, rng: &mut R) -> Vec<usize> {
    let eligible: Vec<usize> = src
        .annotations
        .iter()
        .enumerate()
        .filter(|(_, a)| !a.iscrowd)
        .map(|(i, _)| i)
        .collect();
    match policy {
        PastePolicy::AllObjects => eligible,
        PastePolicy::OneObject => eligible.choose(rng).copied().into_iter().collect(),
        PastePolicy::RandomSubset { p } => eligible.into_iter().filter(|_| rng.random_bool(p)).collect(),
    }
}

/// Result of occluding a set of annotations.
#[derive(Debug, Clone, Default)]
pub struct OcclusionUpdate {
    /// Surviving annotations with masks, boxes and areas recomputed.
    pub kept: Vec<InstanceAnnotation>,
    /// Ids of annotations left with too few visible pixels.
    pub removed: Vec<u64>,
    /// Non-crowd annotations that were subject to the update.
    pub candidates: usize,
    /// Sum over candidates of visible area / original area.
    pub visible_ratio_sum: f64,
}

/// Subtracts the binary paste mask from every non-crowd annotation.
///
/// Annotations with `min_visible_pixels` or fewer remaining pixels are removed.
/// Crowd annotations pass through untouched. Masks are decoded to the alpha's
/// shape when they are not bitmaps yet.
pub fn update_annotations(
    targets: Vec<InstanceAnnotation>,
    binary_alpha: &Bitmap,
    min_visible_pixels: u64,
) -> Result<OcclusionUpdate> {
    let (h, w) = binary_alpha.shape();
    let mut out = OcclusionUpdate::default();
    for mut a in targets {
        if a.iscrowd {
            out.kept.push(a);
            continue;
        }
        let seg = std::mem::replace(&mut a.segmentation, crate::SegMask::Polygons(Vec::new()));
        let mut mask = seg.into_bitmap(h, w)?;
        let original = mask.area();
        mask.subtract(binary_alpha)?;
        let visible = mask.area();
        out.candidates += 1;
        if original > 0 {
            out.visible_ratio_sum += visible as f64 / original as f64;
        }
        if visible <= min_visible_pixels {
            out.removed.push(a.id);
            continue;
        }
        a.set_mask(mask);
        out.kept.push(a);
    }
    Ok(out)
}

/// Where a composed sample came from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    pub target_image_id: u64,
    pub source_image_id: u64,
    /// Source annotation ids, in paste order.
    pub pasted_annotation_ids: Vec<u64>,
    /// Target annotation ids removed by full occlusion.
    pub removed_annotation_ids: Vec<u64>,
}

#[derive(Debug, Clone)]
pub struct ComposedSample {
    pub image: RgbImage,
    /// Surviving target annotations first, then the pasted ones.
    pub annotations: Vec<InstanceAnnotation>,
    num_target: usize,
    pub alpha: AlphaMap,
    pub provenance: Provenance,
    pub(crate) occlusion_candidates: usize,
    pub(crate) visible_ratio_sum: f64,
}

impl ComposedSample {
    pub fn target_annotations(&self) -> &[InstanceAnnotation] {
        &self.annotations[..self.num_target]
    }

    pub fn pasted_annotations(&self) -> &[InstanceAnnotation] {
        &self.annotations[self.num_target..]
    }

    /// Non-crowd target instances that went through the occlusion update.
    pub fn occlusion_candidates(&self) -> usize {
        self.occlusion_candidates
    }

    pub fn visible_ratio_sum(&self) -> f64 {
        self.visible_ratio_sum
    }
}

/// Pastes `src.annotations[subset]` onto `target`.
pub fn paste(
    target: &TransformedSample,
    src: &TransformedSample,
    subset: &[usize],
    blend: &BlendConfig,
    min_visible_pixels: u64,
) -> Result<ComposedSample> {
    let shape = target.shape();
    if src.shape() != shape {
        return Err(Error::ShapeMismatch {
            expected: shape,
            actual: src.shape(),
        });
    }
    let (h, w) = shape;

    let mut pasted = Vec::with_capacity(subset.len());
    for &i in subset {
        let a = src.annotations.get(i).ok_or_else(|| {
            Error::InvalidArgument(format!("subset index {i} out of range ({} instances)", src.annotations.len()))
        })?;
        let mask = a.segmentation.to_bitmap(h, w)?;
        if mask.area() == 0 {
            continue;
        }
        let mut a = a.clone();
        a.set_mask(mask);
        pasted.push(a);
    }
    let masks: Vec<&Bitmap> = pasted.iter().filter_map(|a| a.mask()).collect();
    let binary = union_mask(&masks, h, w)?;
    let alpha = alpha::alpha_from_binary(&binary, blend);
    let image = composite(&src.image, &target.image, &alpha);

    let update = update_annotations(target.annotations.clone(), &binary, min_visible_pixels)?;
    let num_target = update.kept.len();
    let provenance = Provenance {
        target_image_id: target.source_image_id,
        source_image_id: src.source_image_id,
        pasted_annotation_ids: pasted.iter().map(|a| a.id).collect(),
        removed_annotation_ids: update.removed,
    };
    let mut annotations = update.kept;
    annotations.extend(pasted);
    Ok(ComposedSample {
        image,
        annotations,
        num_target,
        alpha,
        provenance,
        occlusion_candidates: update.candidates,
        visible_ratio_sum: update.visible_ratio_sum,
    })
}

/// `top × α + bottom × (1 − α)` per channel, rounded half away from zero.
/// Pixels with α exactly 0 or 1 are copied without arithmetic.
pub fn composite(top: &RgbImage, bottom: &RgbImage, alpha: &AlphaMap) -> RgbImage {
    let mut out = bottom.clone();
    for (x, y, px) in out.enumerate_pixels_mut() {
        let a = alpha.get(x, y);
        if a == 0.0 {
            continue;
        }
        let t = top.get_pixel(x, y).0;
        if a == 1.0 {
            *px = Rgb(t);
            continue;
        }
        let a = a as f64;
        for (dst, &src) in px.0.iter_mut().zip(&t) {
            let v = src as f64 * a + *dst as f64 * (1.0 - a);
            *dst = v.round().clamp(0.0, 255.0) as u8;
        }
    }
    out
}

/// Shifts the pixels and masks of a sample by `(dx, dy)`; vacated pixels take
/// the pad value and instances pushed out of frame are dropped.
pub fn translate(sample: &TransformedSample, dx: i32, dy: i32, min_visible_pixels: u64) -> TransformedSample {
    let (h, w) = sample.shape();
    let shift = |o: u32, d: i32, n: u32| -> Option<u32> {
        let s = o as i64 - d as i64;
        (s >= 0 && s < n as i64).then_some(s as u32)
    };
    let pad = Rgb(sample.params.pad_value);
    let image = RgbImage::from_fn(w, h, |x, y| match (shift(x, dx, w), shift(y, dy, h)) {
        (Some(sx), Some(sy)) => *sample.image.get_pixel(sx, sy),
        _ => pad,
    });
    let mut annotations = Vec::with_capacity(sample.annotations.len());
    let mut cropped_out = sample.cropped_out.clone();
    for a in &sample.annotations {
        let Some(src) = a.mask() else {
            annotations.push(a.clone());
            continue;
        };
        let mut mask = Bitmap::new(h, w);
        for y in 0..h {
            let Some(sy) = shift(y, dy, h) else { continue };
            for x in 0..w {
                if let Some(sx) = shift(x, dx, w) {
                    if src.get(sx, sy) {
                        mask.set(x, y, true);
                    }
                }
            }
        }
        if mask.area() <= min_visible_pixels {
            cropped_out.push(a.id);
            continue;
        }
        let mut a = a.clone();
        a.set_mask(mask);
        annotations.push(a);
    }
    TransformedSample {
        image,
        annotations,
        params: sample.params,
        source_image_id: sample.source_image_id,
        cropped_out,
    }
}
