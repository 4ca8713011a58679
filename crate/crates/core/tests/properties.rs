//! Property tests for the codec, geometry and compositing invariants.

mod common;

use common::{bbox_is_tight, count_ones, random_bitmap, warp_mask_oracle};
use copypaste::annotations::{compress_rle, decompress_rle};
use copypaste::copy_paste::{build_alpha, paste, update_annotations};
use copypaste::transforms::{apply, sample_params, Canvas, PadAnchor};
use copypaste::{BlendConfig, Bitmap, InstanceAnnotation, JitterMode, Rle, TransformParams, TransformedSample};
use image::{Rgb, RgbImage};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn random_image<R: Rng>(rng: &mut R, h: u32, w: u32) -> RgbImage {
    RgbImage::from_fn(w, h, |_, _| Rgb([rng.random(), rng.random(), rng.random()]))
}

fn sample_with(rng: &mut ChaCha8Rng, h: u32, w: u32, n: usize, id0: u64) -> TransformedSample {
    let anns = (0..n)
        .map(|i| InstanceAnnotation::from_bitmap(id0 + i as u64, 1, 1, random_bitmap(rng, h, w)))
        .filter(|a| a.area > 0.0)
        .collect();
    TransformedSample::untransformed(random_image(rng, h, w), anns, id0).unwrap()
}

fn jitter_mode() -> impl Strategy<Value = JitterMode> {
    prop_oneof![
        Just(JitterMode::Ssj),
        Just(JitterMode::Lsj),
        (0.05f64..3.0).prop_map(|scale| JitterMode::Fixed { scale }),
        (0.05f64..1.5, 0.0f64..1.5).prop_map(|(min, d)| JitterMode::Range { min, max: min + d }),
    ]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn rle_round_trip(seed: u64, h in 1u32..40, w in 1u32..40) {
        let m = random_bitmap(&mut ChaCha8Rng::seed_from_u64(seed), h, w);
        let rle = Rle::from_bitmap(&m);
        prop_assert_eq!(rle.counts().iter().map(|&c| c as u64).sum::<u64>(), (h * w) as u64);
        prop_assert_eq!(rle.to_bitmap(), m.clone());
        let s = compress_rle(&rle);
        prop_assert!(s.bytes().all(|b| (48..=111).contains(&b)));
        prop_assert_eq!(decompress_rle(&s, h, w).unwrap(), rle);
    }

    #[test]
    fn area_and_bbox_are_tight(seed: u64, h in 1u32..40, w in 1u32..40) {
        let m = random_bitmap(&mut ChaCha8Rng::seed_from_u64(seed), h, w);
        prop_assert_eq!(m.area(), count_ones(&m));
        prop_assert!(bbox_is_tight(&m, m.tight_bbox()));
    }

    #[test]
    fn flip_is_an_involution(seed: u64, h in 1u32..30, w in 1u32..30) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let m = random_bitmap(&mut rng, h, w);
        prop_assert_eq!(m.flipped_horizontal().flipped_horizontal(), m.clone());

        let img = random_image(&mut rng, h, w);
        let canvas = Canvas::new(h, w);
        let flip = TransformParams::fixed(1.0, true, (h, w), &canvas);
        let a = InstanceAnnotation::from_bitmap(1, 1, 1, m.clone());
        let once = apply(&img, &[a], &flip, 1, 0).unwrap();
        let twice = apply(&once.image, &once.annotations, &flip, 1, 0).unwrap();
        prop_assert_eq!(&twice.image, &img);
        if m.area() > 0 {
            prop_assert_eq!(twice.annotations[0].mask().unwrap(), &m);
        }
    }

    #[test]
    fn sampled_scales_stay_in_range(seed: u64, mode in jitter_mode()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (lo, hi) = mode.range();
        for _ in 0..64 {
            let s = mode.sample_scale(&mut rng);
            prop_assert!(s >= lo && s <= hi, "{s} outside [{lo}, {hi}]");
        }
    }

    #[test]
    fn warped_masks_match_brute_force(
        seed: u64, sh in 1u32..40, sw in 1u32..40, th in 1u32..40, tw in 1u32..40,
        mode in jitter_mode(), random_anchor: bool,
    ) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let m = random_bitmap(&mut rng, sh, sw);
        let mut canvas = Canvas::new(th, tw);
        if random_anchor {
            canvas.anchor = PadAnchor::Random;
        }
        let p = sample_params(mode, &canvas, (sh, sw), &mut rng);
        let img = random_image(&mut rng, sh, sw);
        let a = InstanceAnnotation::from_bitmap(1, 1, 1, m.clone());
        let out = apply(&img, &[a], &p, 1, 0).unwrap();
        let expected = warp_mask_oracle(&m, &p);
        prop_assert_eq!(out.shape(), (th, tw));
        if expected.area() == 0 {
            prop_assert!(out.annotations.is_empty());
            prop_assert_eq!(out.cropped_out.clone(), vec![1]);
        } else {
            let got = &out.annotations[0];
            prop_assert_eq!(got.mask().unwrap(), &expected);
            prop_assert_eq!(got.area, expected.area() as f64);
            prop_assert!(bbox_is_tight(&expected, got.bbox));
        }
        // Pixels outside the placed, scaled image are padding.
        for y in 0..th {
            for x in 0..tw {
                let inside_y = y >= p.pad_offset.1 && y - p.pad_offset.1 + p.crop_offset.1 < p.scaled.0;
                let inside_x = x >= p.pad_offset.0 && x - p.pad_offset.0 + p.crop_offset.0 < p.scaled.1;
                if !(inside_x && inside_y) {
                    prop_assert_eq!(out.image.get_pixel(x, y).0, p.pad_value);
                }
            }
        }
    }

    #[test]
    fn hard_paste_partitions_pixels(seed: u64, h in 1u32..32, w in 1u32..32, n in 0usize..4) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let target = sample_with(&mut rng, h, w, 3, 1);
        let src = sample_with(&mut rng, h, w, n, 100);
        let subset: Vec<usize> = (0..src.annotations.len()).collect();
        let out = paste(&target, &src, &subset, &BlendConfig::default(), 0).unwrap();
        let mut support = Bitmap::new(h, w);
        for a in &src.annotations {
            support.union_with(a.mask().unwrap()).unwrap();
        }
        for y in 0..h {
            for x in 0..w {
                let expected = if support.get(x, y) { src.image.get_pixel(x, y) } else { target.image.get_pixel(x, y) };
                prop_assert_eq!(out.image.get_pixel(x, y), expected);
            }
        }
        // Surviving target masks never overlap the pasted layer.
        for a in out.target_annotations() {
            prop_assert_eq!(a.mask().unwrap().overlap(&support).unwrap(), 0);
        }
        prop_assert_eq!(
            out.annotations.len(),
            target.annotations.len() - out.provenance.removed_annotation_ids.len() + out.pasted_annotations().len()
        );
    }

    #[test]
    fn blended_pixels_are_convex(seed: u64, h in 1u32..24, w in 1u32..24, sigma in 0.3f64..3.0, radius in 0u32..5) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let target = sample_with(&mut rng, h, w, 2, 1);
        let src = sample_with(&mut rng, h, w, 2, 100);
        let subset: Vec<usize> = (0..src.annotations.len()).collect();
        let blend = BlendConfig::gaussian(sigma, radius);
        let out = paste(&target, &src, &subset, &blend, 0).unwrap();
        let masks: Vec<&Bitmap> = src.annotations.iter().filter_map(|a| a.mask()).collect();
        let alpha = build_alpha(&masks, h, w, &blend).unwrap();
        prop_assert!(alpha.values().iter().all(|a| (0.0..=1.0).contains(a)));
        for y in 0..h {
            for x in 0..w {
                let (s, t, o) = (src.image.get_pixel(x, y).0, target.image.get_pixel(x, y).0, out.image.get_pixel(x, y).0);
                for c in 0..3 {
                    prop_assert!(o[c] >= s[c].min(t[c]) && o[c] <= s[c].max(t[c]));
                }
            }
        }
    }

    #[test]
    fn occlusion_update_conserves_area(seed: u64, h in 1u32..32, w in 1u32..32, min_visible in 0u64..6) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let alpha = random_bitmap(&mut rng, h, w);
        let originals: Vec<Bitmap> = (0..4).map(|_| random_bitmap(&mut rng, h, w)).collect();
        let anns: Vec<InstanceAnnotation> = originals
            .iter()
            .enumerate()
            .map(|(i, m)| InstanceAnnotation::from_bitmap(i as u64 + 1, 1, 1, m.clone()))
            .collect();
        let update = update_annotations(anns, &alpha, min_visible).unwrap();
        for (i, m) in originals.iter().enumerate() {
            let id = i as u64 + 1;
            let overlap = m.overlap(&alpha).unwrap();
            let visible = m.area() - overlap;
            match update.kept.iter().find(|a| a.id == id) {
                Some(a) => {
                    let mask = a.mask().unwrap();
                    prop_assert_eq!(mask.area() + overlap, m.area());
                    prop_assert!(visible > min_visible);
                    prop_assert!(bbox_is_tight(mask, a.bbox));
                    prop_assert_eq!(a.area, mask.area() as f64);
                }
                None => {
                    prop_assert!(visible <= min_visible);
                    prop_assert!(update.removed.contains(&id) || m.area() == 0);
                }
            }
        }
    }
}
