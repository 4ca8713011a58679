//! Long-tail re-balancing: repeat factor sampling (RFS) and class-balanced
//! loss weights.
//!
//! RFS repeats image `I` `r(I) = max_c∈I max(1, sqrt(t / f(c)))` times per
//! epoch, where `f(c)` is the fraction of images containing category `c`.
//! Fractional repeat factors are rounded stochastically.
//!
//! Class-balanced weights are `(1 − β) / (1 − βⁿ)` for a category with `n`
//! training instances, divided by their mean and clipped to `[0.01, 5]`.

use std::collections::BTreeMap;
use std::io::Write;

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::annotations::Dataset;
use crate::{Error, Result};

pub const DEFAULT_RFS_THRESHOLD: f64 = 0.001;
pub const DEFAULT_CB_BETA: f64 = 0.999;
pub const WEIGHT_CLIP: (f64, f64) = (0.01, 5.0);

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CategoryStat {
    pub image_count: usize,
    pub frequency: f64,
}

/// Image frequency per category; categories with no images are absent.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CategoryFrequency {
    pub num_images: usize,
    pub categories: BTreeMap<u64, CategoryStat>,
}

impl CategoryFrequency {
    pub fn get(&self, category_id: u64) -> Option<f64> {
        self.categories.get(&category_id).map(|s| s.frequency)
    }
}

/// `f(c)` over non-crowd annotations.
pub fn category_frequency(d: &Dataset) -> Result<CategoryFrequency> {
    category_frequency_with(d, false)
}

pub fn category_frequency_with(d: &Dataset, include_crowd: bool) -> Result<CategoryFrequency> {
    if d.is_empty() {
        return Err(Error::InvalidArgument("category frequency of an empty dataset".into()));
    }
    let mut counts: BTreeMap<u64, usize> = BTreeMap::new();
    for pos in 0..d.images().len() {
        let mut present: Vec<u64> = d
            .annotations_at(pos)
            .filter(|a| include_crowd || !a.iscrowd)
            .map(|a| a.category_id)
            .collect();
        present.sort_unstable();
        present.dedup();
        for c in present {
            *counts.entry(c).or_default() += 1;
        }
    }
    let n = d.images().len();
    Ok(CategoryFrequency {
        num_images: n,
        categories: counts
            .into_iter()
            .map(|(c, k)| {
                (
                    c,
                    CategoryStat {
                        image_count: k,
                        frequency: k as f64 / n as f64,
                    },
                )
            })
            .collect(),
    })
}

/// `max(1, sqrt(t / f))`.
pub fn repeat_factor(frequency: f64, threshold: f64) -> Result<f64> {
    if !(frequency > 0.0 && frequency <= 1.0) {
        return Err(Error::InvalidArgument(format!("frequency {frequency} outside (0, 1]")));
    }
    if !(threshold > 0.0 && threshold.is_finite()) {
        return Err(Error::InvalidArgument(format!("threshold {threshold} must be positive")));
    }
    Ok((threshold / frequency).sqrt().max(1.0))
}

/// Image-level repeat factors over non-crowd instances, indexed like
/// [`Dataset::images`]. Images without such instances get 1.
pub fn image_repeat_factors(d: &Dataset, freq: &CategoryFrequency, threshold: f64) -> Result<Vec<f64>> {
    let per_category: BTreeMap<u64, f64> = freq
        .categories
        .iter()
        .map(|(&c, s)| Ok((c, repeat_factor(s.frequency, threshold)?)))
        .collect::<Result<_>>()?;
    Ok((0..d.images().len())
        .map(|pos| {
            d.annotations_at(pos)
                .filter(|a| !a.iscrowd)
                .filter_map(|a| per_category.get(&a.category_id))
                .fold(1.0f64, |acc, &r| acc.max(r))
        })
        .collect())
}

/// One RFS epoch: image ids repeated `floor(r)` times plus once more with
/// probability `frac(r)`, then shuffled.
pub fn rfs_epoch<R: Rng + ?Sized>(d: &Dataset, threshold: f64, rng: &mut R) -> Result<Vec<u64>> {
    let freq = category_frequency(d)?;
    let factors = image_repeat_factors(d, &freq, threshold)?;
    Ok(epoch_from_factors(d, &factors, rng))
}

pub fn epoch_from_factors<R: Rng + ?Sized>(d: &Dataset, factors: &[f64], rng: &mut R) -> Vec<u64> {
    let mut out = Vec::with_capacity(factors.iter().map(|r| r.ceil() as usize).sum());
    for (img, &r) in d.images().iter().zip(factors) {
        let whole = r.floor();
        let frac = r - whole;
        let mut copies = whole as usize;
        if frac > 0.0 && rng.random::<f64>() < frac {
            copies += 1;
        }
        out.extend(std::iter::repeat_n(img.id, copies));
    }
    out.shuffle(rng);
    out
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RepeatFactorRow {
    pub category_id: u64,
    pub name: String,
    pub image_count: usize,
    pub frequency: f64,
    pub repeat_factor: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RepeatFactorTable {
    pub threshold: f64,
    pub num_images: usize,
    pub rows: Vec<RepeatFactorRow>,
}

impl RepeatFactorTable {
    pub fn build(d: &Dataset, threshold: f64) -> Result<Self> {
        let freq = category_frequency(d)?;
        let rows = d
            .categories()
            .iter()
            .filter_map(|c| freq.categories.get(&c.id).map(|s| (c, s)))
            .map(|(c, s)| {
                Ok(RepeatFactorRow {
                    category_id: c.id,
                    name: c.name.clone(),
                    image_count: s.image_count,
                    frequency: s.frequency,
                    repeat_factor: repeat_factor(s.frequency, threshold)?,
                })
            })
            .collect::<Result<_>>()?;
        Ok(RepeatFactorTable {
            threshold,
            num_images: freq.num_images,
            rows,
        })
    }

    /// CSV preceded by a `#` comment line carrying the threshold.
    pub fn write_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "# repeat factor sampling, t={}, images={}", self.threshold, self.num_images)?;
        let mut csv = csv::Writer::from_writer(w);
        for row in &self.rows {
            csv.serialize(row)?;
        }
        csv.flush()
    }
}

/// Training instances per category (non-crowd).
pub fn instance_counts(d: &Dataset) -> BTreeMap<u64, u64> {
    let mut counts = BTreeMap::new();
    for a in d.annotations().iter().filter(|a| !a.iscrowd) {
        *counts.entry(a.category_id).or_default() += 1;
    }
    counts
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassWeight {
    pub category_id: u64,
    pub instances: u64,
    pub raw: f64,
    pub normalized: f64,
    /// `normalized` clipped to [`WEIGHT_CLIP`].
    pub weight: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassWeights {
    pub beta: f64,
    pub entries: Vec<ClassWeight>,
}

impl ClassWeights {
    pub fn get(&self, category_id: u64) -> Option<&ClassWeight> {
        self.entries.iter().find(|e| e.category_id == category_id)
    }

    pub fn write_csv<W: Write>(&self, mut w: W, names: &BTreeMap<u64, String>) -> std::io::Result<()> {
        writeln!(
            w,
            "# class-balanced weights, beta={}, clip=[{}, {}]",
            self.beta, WEIGHT_CLIP.0, WEIGHT_CLIP.1
        )?;
        let mut csv = csv::Writer::from_writer(w);
        csv.write_record(["category_id", "name", "instances", "raw", "normalized", "weight"])?;
        for e in &self.entries {
            csv.write_record([
                e.category_id.to_string(),
                names.get(&e.category_id).cloned().unwrap_or_default(),
                e.instances.to_string(),
                e.raw.to_string(),
                e.normalized.to_string(),
                e.weight.to_string(),
            ])?;
        }
        csv.flush()
    }
}

/// `(1 − β) / (1 − βⁿ)`.
pub fn class_balanced_raw(n: u64, beta: f64) -> f64 {
    (1.0 - beta) / (1.0 - beta.powf(n as f64))
}

pub fn class_balanced_weights(counts: &BTreeMap<u64, u64>, beta: f64) -> Result<ClassWeights> {
    if !(beta > 0.0 && beta < 1.0) {
        return Err(Error::InvalidArgument(format!("beta {beta} outside (0, 1)")));
    }
    if let Some((c, _)) = counts.iter().find(|(_, &n)| n == 0) {
        return Err(Error::InvalidArgument(format!("category {c} has no instances")));
    }
    if counts.is_empty() {
        return Ok(ClassWeights {
            beta,
            entries: Vec::new(),
        });
    }
    let raw: Vec<f64> = counts.values().map(|&n| class_balanced_raw(n, beta)).collect();
    let mean = raw.iter().sum::<f64>() / raw.len() as f64;
    let entries = counts
        .iter()
        .zip(raw)
        .map(|((&category_id, &instances), raw)| {
            let normalized = raw / mean;
            ClassWeight {
                category_id,
                instances,
                raw,
                normalized,
                weight: normalized.clamp(WEIGHT_CLIP.0, WEIGHT_CLIP.1),
            }
        })
        .collect();
    Ok(ClassWeights { beta, entries })
}
