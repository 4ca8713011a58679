//! Mixing ground-truth and pseudo-labeled data for self-training.

use std::sync::Arc;

use rand::Rng;
use serde::{Deserialize, Serialize};
use serde_json::Value;

use super::config::{DataMixSpec, PasteTargets};
use crate::annotations::{Dataset, ImageRecord, InstanceAnnotation};
use crate::longtail;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Pool {
    Supervised,
    Pseudo,
}

/// A target image: which pool, and its position in that dataset's image list.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct TargetRef {
    pub pool: Pool,
    pub index: usize,
}

/// Drops pseudo annotations whose `score` is below `threshold`. Annotations
/// without a score are kept.
pub fn filter_pseudo(d: &Dataset, threshold: f64) -> Result<Dataset> {
    let annotations: Vec<InstanceAnnotation> = d
        .annotations()
        .iter()
        .filter(|a| a.score.is_none_or(|s| s >= threshold))
        .cloned()
        .collect();
    let mut out = Dataset::new(d.images().to_vec(), annotations, d.categories().to_vec())?;
    out.set_image_root(d.image_root());
    Ok(out)
}

/// Requires identical category id → name maps.
pub fn check_categories_compatible(a: &Dataset, b: &Dataset) -> Result<()> {
    let map = |d: &Dataset| {
        d.categories()
            .iter()
            .map(|c| (c.id, c.name.clone()))
            .collect::<std::collections::BTreeMap<_, _>>()
    };
    let (ma, mb) = (map(a), map(b));
    if ma != mb {
        let diff = ma
            .iter()
            .find(|(id, name)| mb.get(id) != Some(name))
            .map(|(id, name)| format!("category {id} ({name:?})"))
            .or_else(|| mb.keys().find(|id| !ma.contains_key(id)).map(|id| format!("category {id}")))
            .unwrap_or_default();
        return Err(Error::Dataset(format!("category tables differ at {diff}")));
    }
    Ok(())
}

/// Draws target and source images according to a [`DataMixSpec`] without
/// copying any pixel data.
#[derive(Debug, Clone)]
pub struct SamplingView {
    supervised: Arc<Dataset>,
    pseudo: Option<Arc<Dataset>>,
    targets: PasteTargets,
    fraction_supervised: f64,
    /// Cumulative repeat factors over supervised images, when RFS is on.
    rfs_cumulative: Option<Vec<f64>>,
}

/// Builds the sampling view for self-training Copy-Paste. Pseudo data is only
/// ever a target pool; sources are always ground truth.
pub fn merge_pseudo(
    supervised: Arc<Dataset>,
    pseudo: Option<Arc<Dataset>>,
    spec: &DataMixSpec,
) -> Result<SamplingView> {
    if supervised.is_empty() {
        return Err(Error::Dataset("supervised dataset has no images".into()));
    }
    if let Some(p) = &pseudo {
        check_categories_compatible(&supervised, p)?;
    }
    match (spec.paste_targets, &pseudo) {
        (PasteTargets::SupervisedOnly, _) => {}
        (_, None) => {
            return Err(Error::config(
                "mix.pseudo",
                "required when paste_targets is pseudo_only or both",
            ))
        }
        (_, Some(p)) if p.is_empty() => return Err(Error::Dataset("pseudo dataset has no images".into())),
        _ => {}
    }
    Ok(SamplingView {
        supervised,
        pseudo: if spec.paste_targets == PasteTargets::SupervisedOnly {
            None
        } else {
            pseudo
        },
        targets: spec.paste_targets,
        fraction_supervised: spec.batch_fraction_supervised,
        rfs_cumulative: None,
    })
}

impl SamplingView {
    /// Weights supervised target draws by image repeat factors with threshold `t`.
    pub fn with_rfs(mut self, threshold: f64) -> Result<Self> {
        let freq = longtail::category_frequency(&self.supervised)?;
        let factors = longtail::image_repeat_factors(&self.supervised, &freq, threshold)?;
        let mut acc = 0.0;
        self.rfs_cumulative = Some(
            factors
                .into_iter()
                .map(|r| {
                    acc += r;
                    acc
                })
                .collect(),
        );
        Ok(self)
    }

    pub fn supervised(&self) -> &Arc<Dataset> {
        &self.supervised
    }

    pub fn pseudo(&self) -> Option<&Arc<Dataset>> {
        self.pseudo.as_ref()
    }

    pub fn dataset(&self, pool: Pool) -> &Dataset {
        match pool {
            Pool::Supervised => &self.supervised,
            Pool::Pseudo => self.pseudo.as_deref().expect("pseudo pool drawn without pseudo data"),
        }
    }

    pub fn record(&self, t: TargetRef) -> &ImageRecord {
        &self.dataset(t.pool).images()[t.index]
    }

    /// Draws with replacement. `pool_rng` picks the pool, `image_rng` the image.
    pub fn draw_target<R: Rng + ?Sized, S: Rng + ?Sized>(&self, pool_rng: &mut R, image_rng: &mut S) -> TargetRef {
        let pool = match self.targets {
            PasteTargets::SupervisedOnly => Pool::Supervised,
            PasteTargets::PseudoOnly => Pool::Pseudo,
            PasteTargets::Both => {
                if pool_rng.random_bool(self.fraction_supervised) {
                    Pool::Supervised
                } else {
                    Pool::Pseudo
                }
            }
        };
        let index = match pool {
            Pool::Supervised => self.draw_supervised_target(image_rng),
            Pool::Pseudo => image_rng.random_range(0..self.dataset(Pool::Pseudo).images().len()),
        };
        TargetRef { pool, index }
    }

    fn draw_supervised_target<R: Rng + ?Sized>(&self, rng: &mut R) -> usize {
        match &self.rfs_cumulative {
            Some(cum) => {
                let total = *cum.last().expect("non-empty");
                let u = rng.random::<f64>() * total;
                cum.partition_point(|&c| c <= u).min(cum.len() - 1)
            }
            None => rng.random_range(0..self.supervised.images().len()),
        }
    }

    /// Uniform draw of a ground-truth source image.
    pub fn draw_source<R: Rng + ?Sized>(&self, rng: &mut R) -> usize {
        rng.random_range(0..self.supervised.images().len())
    }

    /// Materializes supervised and pseudo data as one COCO dataset. Pseudo
    /// images and annotations get fresh ids above the supervised ranges and
    /// carry `"pseudo": true` plus their original id.
    pub fn merged_dataset(&self) -> Result<Dataset> {
        let sup = &self.supervised;
        let mut images = sup.images().to_vec();
        let mut annotations = sup.annotations().to_vec();
        if let Some(p) = &self.pseudo {
            let image_base = images.iter().map(|i| i.id).max().unwrap_or(0);
            let ann_base = annotations.iter().map(|a| a.id).max().unwrap_or(0);
            let mut id_map = std::collections::HashMap::new();
            for (i, img) in p.images().iter().enumerate() {
                let mut img = img.clone();
                let new_id = image_base + i as u64 + 1;
                id_map.insert(img.id, new_id);
                img.extra.insert("pseudo".into(), Value::Bool(true));
                img.extra.insert("original_id".into(), img.id.into());
                img.extra.insert(
                    "image_root".into(),
                    Value::String(p.image_root().to_string_lossy().into_owned()),
                );
                img.id = new_id;
                images.push(img);
            }
            for (i, a) in p.annotations().iter().enumerate() {
                let mut a = a.clone();
                a.extra.insert("pseudo".into(), Value::Bool(true));
                a.extra.insert("original_id".into(), a.id.into());
                a.id = ann_base + i as u64 + 1;
                a.image_id = id_map[&a.image_id];
                annotations.push(a);
            }
        }
        let mut out = Dataset::new(images, annotations, sup.categories().to_vec())?;
        out.set_image_root(sup.image_root());
        Ok(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::annotations::{Bitmap, CategoryRecord};

    fn dataset(n: u64, cats: &[(u64, &str)]) -> Arc<Dataset> {
        let images = (1..=n).map(|i| ImageRecord::new(i, format!("{i}.png"), 4, 4)).collect();
        let mut m = Bitmap::new(4, 4);
        m.set(0, 0, true);
        let mut a = InstanceAnnotation::from_bitmap(1, 1, cats[0].0, m);
        a.score = Some(0.3);
        let categories = cats.iter().map(|&(id, name)| CategoryRecord::new(id, name)).collect();
        Arc::new(Dataset::new(images, vec![a], categories).unwrap())
    }

    #[test]
    fn category_mismatch() {
        let a = dataset(2, &[(1, "a")]);
        let b = dataset(2, &[(1, "b")]);
        let mut spec = DataMixSpec::supervised_only("x", "y");
        spec.paste_targets = PasteTargets::Both;
        let err = merge_pseudo(a, Some(b), &spec).unwrap_err();
        assert!(err.to_string().contains("category 1"), "{err}");
    }

    #[test]
    fn pseudo_filter_by_score() {
        let d = dataset(2, &[(1, "a")]);
        assert_eq!(filter_pseudo(&d, 0.5).unwrap().annotations().len(), 0);
        assert_eq!(filter_pseudo(&d, 0.2).unwrap().annotations().len(), 1);
    }

    #[test]
    fn merged_dataset_reassigns_pseudo_ids() {
        let a = dataset(3, &[(1, "a")]);
        let b = dataset(2, &[(1, "a")]);
        let mut spec = DataMixSpec::supervised_only("x", "y");
        spec.paste_targets = PasteTargets::Both;
        let merged = merge_pseudo(a, Some(b), &spec).unwrap().merged_dataset().unwrap();
        assert_eq!(merged.images().len(), 5);
        assert_eq!(merged.images()[3].id, 4);
        assert_eq!(merged.images()[3].extra["pseudo"], true);
        assert_eq!(merged.annotations()[1].id, 2);
        assert_eq!(merged.annotations()[1].image_id, 4);
    }
}
