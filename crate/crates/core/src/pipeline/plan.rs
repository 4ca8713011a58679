use std::sync::Arc;

use rand::Rng;
use rand_distr::{Beta, Distribution};
use serde::{Deserialize, Serialize};

use super::config::{AugConfig, Mode};
use super::mix::{SamplingView, TargetRef};
use super::rng::{item_rng, Stream};
use crate::transforms::{sample_params, Canvas, JitterMode, TransformParams};
use crate::Result;

/// The second image of an item: paste source or mixup partner.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SourceDraw {
    /// Position in the supervised image list.
    pub index: usize,
    pub image_id: u64,
    pub params: TransformParams,
}

/// Everything item `index` will do, except the subset draw, which depends on
/// which source instances survive jittering and is taken from the item's
/// `Subset` stream at execution time.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlanItem {
    pub index: u64,
    pub mode: Mode,
    pub target: TargetRef,
    pub target_image_id: u64,
    pub target_params: TransformParams,
    pub source: Option<SourceDraw>,
    pub mixup_lambda: Option<f64>,
    /// Translation of the pasted layer, `(0, 0)` unless `max_paste_shift > 0`.
    pub paste_shift: (i32, i32),
}

/// Indexed augmentation plan. Item `k` is a pure function of the seed, `k` and
/// the datasets.
#[derive(Debug, Clone)]
pub struct Plan {
    view: Arc<SamplingView>,
    seed: u64,
    len: u64,
    mode: Mode,
    canvas: Canvas,
    main_jitter: JitterMode,
    pasted_jitter: JitterMode,
    mixup: Option<Beta<f64>>,
    max_paste_shift: u32,
}

impl Plan {
    pub fn new(config: &AugConfig, view: Arc<SamplingView>, len: u64) -> Result<Self> {
        config.validate()?;
        let mode = config.mode();
        let mixup = match mode {
            Mode::Mixup => Some(
                Beta::new(config.mixup_beta, config.mixup_beta)
                    .map_err(|e| crate::Error::config("mixup_beta", e.to_string()))?,
            ),
            _ => None,
        };
        Ok(Plan {
            view,
            seed: config.seed,
            len,
            mode,
            canvas: config.canvas(),
            main_jitter: config.main_jitter,
            pasted_jitter: config.pasted_jitter,
            mixup,
            max_paste_shift: config.max_paste_shift,
        })
    }

    pub fn len(&self) -> u64 {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn mode(&self) -> Mode {
        self.mode
    }

    pub fn canvas(&self) -> &Canvas {
        &self.canvas
    }

    pub fn view(&self) -> &Arc<SamplingView> {
        &self.view
    }

    pub fn item(&self, index: u64) -> PlanItem {
        let rng = |s| item_rng(self.seed, index, s);
        let target = self
            .view
            .draw_target(&mut rng(Stream::TargetPool), &mut rng(Stream::TargetImage));
        let record = self.view.record(target);
        let target_params = sample_params(
            self.main_jitter,
            &self.canvas,
            (record.height, record.width),
            &mut rng(Stream::TargetJitter),
        );

        let source = (self.mode != Mode::JitterOnly).then(|| {
            let index = self.view.draw_source(&mut rng(Stream::SourceImage));
            let rec = &self.view.supervised().images()[index];
            SourceDraw {
                index,
                image_id: rec.id,
                params: sample_params(
                    self.pasted_jitter,
                    &self.canvas,
                    (rec.height, rec.width),
                    &mut rng(Stream::SourceJitter),
                ),
            }
        });

        let mixup_lambda = self.mixup.as_ref().map(|beta| beta.sample(&mut rng(Stream::MixupLambda)));

        let paste_shift = if self.mode == Mode::CopyPaste && self.max_paste_shift > 0 {
            let s = self.max_paste_shift as i32;
            let mut r = rng(Stream::PasteShift);
            (r.random_range(-s..=s), r.random_range(-s..=s))
        } else {
            (0, 0)
        };

        PlanItem {
            index,
            mode: self.mode,
            target,
            target_image_id: record.id,
            target_params,
            source,
            mixup_lambda,
            paste_shift,
        }
    }

    pub fn items(&self) -> impl Iterator<Item = PlanItem> + '_ {
        (0..self.len).map(|k| self.item(k))
    }
}
