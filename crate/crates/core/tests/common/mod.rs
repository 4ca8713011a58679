//! Helpers and independent oracles shared by the integration tests.
#![allow(dead_code)]

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use copypaste::pipeline::DataMixSpec;
use copypaste::synthetic::{write, SyntheticFiles, SyntheticSpec};
use copypaste::{AugConfig, Bitmap, TransformParams};
use num_bigint::{BigInt, BigUint};
use num_rational::BigRational;
use num_traits::{One, Zero};
use rand::Rng;
use sha2::{Digest, Sha256};

pub fn fixture(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures").join(name)
}

pub fn write_synthetic(dir: &Path, spec: &SyntheticSpec) -> SyntheticFiles {
    write(spec, dir).expect("synthetic dataset")
}

pub fn config_for(files: &SyntheticFiles, size: [u32; 2]) -> AugConfig {
    AugConfig::new(size, DataMixSpec::supervised_only(&files.annotations, &files.images))
}

/// Relative path → sha256 hex of every file under `root`.
pub fn tree_hashes(root: &Path) -> BTreeMap<String, String> {
    fn walk(dir: &Path, root: &Path, out: &mut BTreeMap<String, String>) {
        for entry in std::fs::read_dir(dir).unwrap() {
            let path = entry.unwrap().path();
            if path.is_dir() {
                walk(&path, root, out);
            } else {
                let bytes = std::fs::read(&path).unwrap();
                let digest = Sha256::digest(&bytes);
                let hex = digest.iter().map(|b| format!("{b:02x}")).collect();
                let rel = path.strip_prefix(root).unwrap().to_string_lossy().replace('\\', "/");
                out.insert(rel, hex);
            }
        }
    }
    let mut out = BTreeMap::new();
    walk(root, root, &mut out);
    out
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

/// Random mask: either salt-and-pepper at a random density or a union of a few
/// random rectangles.
pub fn random_bitmap<R: Rng>(rng: &mut R, h: u32, w: u32) -> Bitmap {
    let mut m = Bitmap::new(h, w);
    if rng.random_bool(0.5) {
        let density = rng.random::<f64>();
        for y in 0..h {
            for x in 0..w {
                if rng.random_bool(density) {
                    m.set(x, y, true);
                }
            }
        }
    } else {
        for _ in 0..rng.random_range(0..4) {
            let x0 = rng.random_range(0..w);
            let y0 = rng.random_range(0..h);
            let x1 = rng.random_range(x0..w) + 1;
            let y1 = rng.random_range(y0..h) + 1;
            for y in y0..y1 {
                for x in x0..x1 {
                    m.set(x, y, true);
                }
            }
        }
    }
    m
}

/// Naive per-pixel popcount.
pub fn count_ones(m: &Bitmap) -> u64 {
    let (h, w) = m.shape();
    let mut n = 0;
    for y in 0..h {
        for x in 0..w {
            n += m.get(x, y) as u64;
        }
    }
    n
}

/// A box is tight when it contains every foreground pixel and each of its four
/// edge lines holds at least one, i.e. shrinking any side by one loses a pixel.
pub fn bbox_is_tight(m: &Bitmap, b: copypaste::BBox) -> bool {
    let (h, w) = m.shape();
    if count_ones(m) == 0 {
        return b == copypaste::BBox::EMPTY;
    }
    if b.w < 1.0 || b.h < 1.0 {
        return false;
    }
    let (x0, y0) = (b.x as u32, b.y as u32);
    let (x1, y1) = (x0 + b.w as u32 - 1, y0 + b.h as u32 - 1);
    for y in 0..h {
        for x in 0..w {
            if m.get(x, y) && (x < x0 || x > x1 || y < y0 || y > y1) {
                return false;
            }
        }
    }
    let col_has = |x: u32| (y0..=y1).any(|y| m.get(x, y));
    let row_has = |y: u32| (x0..=x1).any(|x| m.get(x, y));
    col_has(x0) && col_has(x1) && row_has(y0) && row_has(y1)
}

/// Source index whose cell `[i, i+1)` contains the scaled pixel center,
/// found by exhaustive search in exact integer arithmetic.
pub fn nearest_source_oracle(s: u32, scaled: u32, src: u32) -> u32 {
    let lhs = (2 * s as u64 + 1) * src as u64;
    (0..src)
        .find(|&i| 2 * scaled as u64 * i as u64 <= lhs && lhs < 2 * scaled as u64 * (i as u64 + 1))
        .unwrap_or(src - 1)
}

/// Canvas mask of a source mask under `params`, by brute-force inverse mapping.
pub fn warp_mask_oracle(src: &Bitmap, params: &TransformParams) -> Bitmap {
    let (sh, sw) = src.shape();
    let (th, tw) = params.target;
    let mut out = Bitmap::new(th, tw);
    for oy in 0..th {
        for ox in 0..tw {
            let (Some(py), Some(px)) = (
                (oy + params.crop_offset.1).checked_sub(params.pad_offset.1),
                (ox + params.crop_offset.0).checked_sub(params.pad_offset.0),
            ) else {
                continue;
            };
            if py >= params.scaled.0 || px >= params.scaled.1 {
                continue;
            }
            let px = if params.flip { params.scaled.1 - 1 - px } else { px };
            let y = nearest_source_oracle(py, params.scaled.0, sh);
            let x = nearest_source_oracle(px, params.scaled.1, sw);
            if src.get(x, y) {
                out.set(ox, oy, true);
            }
        }
    }
    out
}

/// Rational from a decimal literal such as `"0.001"`.
pub fn decimal(s: &str) -> BigRational {
    let (int, frac) = s.split_once('.').unwrap_or((s, ""));
    let digits: BigInt = format!("{int}{frac}").parse().unwrap();
    BigRational::new(digits, BigInt::from(10u32).pow(frac.len() as u32))
}

/// `q` to f64 via a 60-digit fixed-point intermediate.
pub fn to_f64(q: &BigRational) -> f64 {
    let scale = BigInt::from(10u32).pow(60);
    let fixed = (q * BigRational::from_integer(scale.clone())).to_integer();
    let s = format!("{}e-60", fixed);
    s.parse().unwrap()
}

/// `max(1, sqrt(t / f))` with `f = images_with / num_images`, to ~30 digits.
pub fn repeat_factor_oracle(t: &str, images_with: u64, num_images: u64) -> f64 {
    let q = decimal(t) * BigRational::new(BigInt::from(num_images), BigInt::from(images_with));
    if q <= BigRational::one() {
        return 1.0;
    }
    let scale = BigInt::from(10u32).pow(60);
    let scaled = (q * BigRational::from_integer(scale)).to_integer();
    let root: BigUint = scaled.to_biguint().unwrap().sqrt();
    let s = format!("{}e-30", root);
    s.parse().unwrap()
}

/// Exact `(1 − β)/(1 − βⁿ)`.
pub fn cb_raw_oracle(beta: &BigRational, n: u64) -> BigRational {
    let (p, q) = (beta.numer().clone(), beta.denom().clone());
    let qn = num_traits::pow(q.clone(), n as usize);
    let pn = num_traits::pow(p.clone(), n as usize);
    // (1 − p/q) / (1 − pⁿ/qⁿ) = (q − p)·qⁿ⁻¹ / (qⁿ − pⁿ)
    BigRational::new((&q - &p) * num_traits::pow(q, n as usize - 1), qn - pn)
}

/// Exact normalized and clipped class-balanced weights, in input order.
pub fn cb_table_oracle(beta: &str, counts: &[u64]) -> Vec<(f64, f64, f64)> {
    let b = decimal(beta);
    let raw: Vec<BigRational> = counts.iter().map(|&n| cb_raw_oracle(&b, n)).collect();
    let mut sum = BigRational::zero();
    for r in &raw {
        sum += r;
    }
    let mean = sum / BigRational::from_integer(BigInt::from(raw.len()));
    let lo = decimal("0.01");
    let hi = decimal("5");
    raw.iter()
        .map(|r| {
            let norm = r / &mean;
            let clipped = if norm < lo {
                lo.clone()
            } else if norm > hi {
                hi.clone()
            } else {
                norm.clone()
            };
            (to_f64(r), to_f64(&norm), to_f64(&clipped))
        })
        .collect()
}

pub fn mean_f64(v: &[f64]) -> f64 {
    v.iter().sum::<f64>() / v.len() as f64
}

pub fn assert_big_close(a: f64, b: f64, tol: f64, what: &str) {
    assert!((a - b).abs() <= tol, "{what}: {a} vs {b} (tol {tol})");
}


/// 20 images of 4×4; category `k` (1..=8) appears in images `0..ceil(20 / k)`.
pub fn zipf_fixture_20() -> copypaste::Dataset {
    use copypaste::{CategoryRecord, Dataset, ImageRecord, InstanceAnnotation};
    let images = (0..20).map(|i| ImageRecord::new(i + 1, format!("z{i}.png"), 4, 4)).collect();
    let categories = (1..=8).map(|k| CategoryRecord::new(k, format!("c{k}"))).collect();
    let mut anns = Vec::new();
    for k in 1..=8u64 {
        for i in 0..zipf_images_with(k) {
            let mut m = Bitmap::new(4, 4);
            m.set((k % 4) as u32, (i % 4) as u32, true);
            anns.push(InstanceAnnotation::from_bitmap(anns.len() as u64 + 1, i + 1, k, m));
        }
    }
    Dataset::new(images, anns, categories).unwrap()
}

pub fn zipf_images_with(k: u64) -> u64 {
    20u64.div_ceil(k)
}
