//! Small generated COCO datasets for examples, tests and benchmarks.
//!
//! Instances are axis-aligned rectangles (stored as polygons) and ellipses
//! (stored as compressed RLE) painted in a per-category color over a gradient
//! background. Category ids follow a Zipf law so long-tail tooling has
//! something to chew on.

use std::path::{Path, PathBuf};

use image::{Rgb, RgbImage};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::annotations::{write_dataset, Bitmap, CategoryRecord, Dataset, ImageRecord, InstanceAnnotation, Rle, SegMask};
use crate::pipeline::save_png;
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticSpec {
    pub num_images: usize,
    pub height: u32,
    pub width: u32,
    pub num_categories: u64,
    /// Instances per image are uniform in `1..=max_instances`.
    pub max_instances: usize,
    /// Zipf exponent of the category distribution; 0 gives uniform categories.
    pub zipf_exponent: f64,
    /// Probability that an instance is marked `iscrowd`.
    pub crowd_probability: f64,
    /// When set, every annotation gets a `score` uniform in `[0, 1)`.
    pub with_scores: bool,
    pub seed: u64,
}

impl Default for SyntheticSpec {
    fn default() -> Self {
        SyntheticSpec {
            num_images: 8,
            height: 64,
            width: 80,
            num_categories: 5,
            max_instances: 4,
            zipf_exponent: 1.0,
            crowd_probability: 0.0,
            with_scores: false,
            seed: 7,
        }
    }
}

/// Deterministic color of a category.
pub fn category_color(category_id: u64) -> [u8; 3] {
    let h = category_id.wrapping_mul(0x9E37_79B9_7F4A_7C15);
    [
        64 + (h >> 8) as u8 % 192,
        64 + (h >> 24) as u8 % 192,
        64 + (h >> 40) as u8 % 192,
    ]
}

fn zipf_cumulative(n: u64, s: f64) -> Vec<f64> {
    let mut acc = 0.0;
    (1..=n)
        .map(|k| {
            acc += (k as f64).powf(-s);
            acc
        })
        .collect()
}

fn ellipse(h: u32, w: u32, cx: f64, cy: f64, rx: f64, ry: f64) -> Bitmap {
    let mut m = Bitmap::new(h, w);
    for y in 0..h {
        for x in 0..w {
            let dx = (x as f64 + 0.5 - cx) / rx;
            let dy = (y as f64 + 0.5 - cy) / ry;
            if dx * dx + dy * dy <= 1.0 {
                m.set(x, y, true);
            }
        }
    }
    m
}

/// Generates the dataset and its images in memory. Image `i` has id `i + 1`
/// and file name `img_<i>.png`.
pub fn generate(spec: &SyntheticSpec) -> Result<(Dataset, Vec<RgbImage>)> {
    if spec.num_categories == 0 || spec.max_instances == 0 || spec.height < 4 || spec.width < 4 {
        return Err(Error::InvalidArgument(
            "synthetic data needs categories, instances and at least 4x4 images".into(),
        ));
    }
    let (h, w) = (spec.height, spec.width);
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let zipf = zipf_cumulative(spec.num_categories, spec.zipf_exponent);
    let total = *zipf.last().expect("non-empty");

    let categories = (1..=spec.num_categories)
        .map(|c| CategoryRecord::new(c, format!("class_{c}")))
        .collect();
    let mut images = Vec::with_capacity(spec.num_images);
    let mut annotations = Vec::new();
    let mut pixels = Vec::with_capacity(spec.num_images);

    for i in 0..spec.num_images {
        let image_id = i as u64 + 1;
        let tint: [u8; 3] = [rng.random_range(0..64), rng.random_range(0..64), rng.random_range(0..64)];
        let mut img = RgbImage::from_fn(w, h, |x, y| {
            let g = ((x * 97 / w) + (y * 61 / h)) as u8;
            Rgb([tint[0] + g / 2, tint[1] + g / 3, tint[2] + g / 4])
        });

        let n = rng.random_range(1..=spec.max_instances);
        for _ in 0..n {
            let u = rng.random::<f64>() * total;
            let category_id = zipf.partition_point(|&c| c <= u).min(zipf.len() - 1) as u64 + 1;
            let bw = rng.random_range(2..=(w / 2).max(2));
            let bh = rng.random_range(2..=(h / 2).max(2));
            let x0 = rng.random_range(0..=w - bw);
            let y0 = rng.random_range(0..=h - bh);

            let (mask, segmentation) = if rng.random_bool(0.5) {
                let (x1, y1) = ((x0 + bw) as f64, (y0 + bh) as f64);
                let (x0f, y0f) = (x0 as f64, y0 as f64);
                let poly = vec![vec![x0f, y0f, x1, y0f, x1, y1, x0f, y1]];
                let mask = crate::annotations::polygons_to_bitmap(&poly, h, w)?;
                (mask, SegMask::Polygons(poly))
            } else {
                let mask = ellipse(
                    h,
                    w,
                    x0 as f64 + bw as f64 / 2.0,
                    y0 as f64 + bh as f64 / 2.0,
                    bw as f64 / 2.0,
                    bh as f64 / 2.0,
                );
                let rle = Rle::from_bitmap(&mask);
                (mask, SegMask::Rle(rle))
            };
            if mask.is_empty() {
                continue;
            }

            let color = category_color(category_id);
            for y in 0..h {
                for x in 0..w {
                    if mask.get(x, y) {
                        let shade = ((x + y) % 8) as u8 * 4;
                        img.put_pixel(x, y, Rgb(color.map(|c| c.saturating_sub(shade))));
                    }
                }
            }

            let mut ann = InstanceAnnotation::from_bitmap(annotations.len() as u64 + 1, image_id, category_id, mask);
            ann.segmentation = segmentation;
            ann.iscrowd = rng.random_bool(spec.crowd_probability);
            if spec.with_scores {
                ann.score = Some(rng.random::<f64>());
            }
            annotations.push(ann);
        }
        images.push(ImageRecord::new(image_id, format!("img_{i}.png"), w, h));
        pixels.push(img);
    }
    Ok((Dataset::new(images, annotations, categories)?, pixels))
}

/// Files written by [`write`].
#[derive(Debug, Clone)]
pub struct SyntheticFiles {
    pub annotations: PathBuf,
    pub images: PathBuf,
}

/// Writes `annotations.json` and `images/img_<i>.png` under `dir`.
pub fn write(spec: &SyntheticSpec, dir: impl AsRef<Path>) -> Result<SyntheticFiles> {
    let dir = dir.as_ref();
    let image_dir = dir.join("images");
    std::fs::create_dir_all(&image_dir).map_err(|e| Error::io(&image_dir, e))?;
    let (dataset, pixels) = generate(spec)?;
    for (rec, img) in dataset.images().iter().zip(&pixels) {
        save_png(img, &image_dir.join(&rec.file_name))?;
    }
    let annotations = dir.join("annotations.json");
    write_dataset(&dataset, &annotations)?;
    Ok(SyntheticFiles {
        annotations,
        images: image_dir,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn masks_match_declared_geometry() {
        let spec = SyntheticSpec::default();
        let (d, pixels) = generate(&spec).unwrap();
        assert_eq!(pixels.len(), spec.num_images);
        for a in d.annotations() {
            let m = a.segmentation.to_bitmap(spec.height, spec.width).unwrap();
            assert_eq!(m.area() as f64, a.area);
            assert_eq!(m.tight_bbox(), a.bbox);
        }
    }

    #[test]
    fn same_seed_same_data() {
        let spec = SyntheticSpec::default();
        let (a, ia) = generate(&spec).unwrap();
        let (b, ib) = generate(&spec).unwrap();
        assert_eq!(a.annotations(), b.annotations());
        assert_eq!(ia, ib);
    }
}
