use image::RgbImage;

use crate::annotations::InstanceAnnotation;
use crate::transforms::TransformedSample;
use crate::{Error, Result};

#[derive(Debug, Clone)]
pub struct WeightedAnnotation {
    pub annotation: InstanceAnnotation,
    /// λ for instances of the first image, 1 − λ for the second.
    pub weight: f64,
}

/// Output of the mixup baseline: a convex pixel combination and the union of
/// both label sets.
#[derive(Debug, Clone)]
pub struct MixedSample {
    pub image: RgbImage,
    pub lambda: f64,
    pub annotations: Vec<WeightedAnnotation>,
    pub first_image_id: u64,
    pub second_image_id: u64,
}

/// `λ·a + (1 − λ)·b`, rounded half away from zero.
pub fn mix_pixels(a: &RgbImage, b: &RgbImage, lambda: f64) -> Result<RgbImage> {
    if a.dimensions() != b.dimensions() {
        return Err(Error::ShapeMismatch {
            expected: (a.height(), a.width()),
            actual: (b.height(), b.width()),
        });
    }
    if !(0.0..=1.0).contains(&lambda) {
        return Err(Error::InvalidArgument(format!("mixup lambda {lambda} outside [0, 1]")));
    }
    let mut out = a.clone();
    for (o, q) in out.iter_mut().zip(b.iter()) {
        let v = lambda * *o as f64 + (1.0 - lambda) * *q as f64;
        *o = v.round().clamp(0.0, 255.0) as u8;
    }
    Ok(out)
}

pub fn mixup(a: &TransformedSample, b: &TransformedSample, lambda: f64) -> Result<MixedSample> {
    let image = mix_pixels(&a.image, &b.image, lambda)?;
    let annotations = a
        .annotations
        .iter()
        .map(|x| (x, lambda))
        .chain(b.annotations.iter().map(|x| (x, 1.0 - lambda)))
        .map(|(x, weight)| WeightedAnnotation {
            annotation: x.clone(),
            weight,
        })
        .collect();
    Ok(MixedSample {
        image,
        lambda,
        annotations,
        first_image_id: a.source_image_id,
        second_image_id: b.source_image_id,
    })
}
