use std::collections::VecDeque;
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Arc;
use std::time::Instant;

use image::RgbImage;
use rayon::prelude::*;
use rayon::ThreadPool;
use serde::{Deserialize, Serialize};
use serde_json::{json, Map, Value};

use super::config::{AugConfig, ErrorPolicy, Mode};
use super::mix::{filter_pseudo, merge_pseudo, Pool, SamplingView};
use super::plan::{Plan, PlanItem};
use super::rng::{item_rng, Stream};
use crate::annotations::{load_dataset, write_dataset, CategoryRecord, Dataset, ImageRecord, InstanceAnnotation};
use crate::copy_paste::{mixup, paste, select_subset, translate};
use crate::transforms::{apply, TransformedSample};
use crate::{Error, Result};

/// Where a sample came from and what was done to it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampleProvenance {
    pub mode: Mode,
    pub target_pool: Pool,
    pub target_image_id: u64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub source_image_id: Option<u64>,
    /// Ground-truth annotation ids of the pasted instances.
    pub pasted_annotation_ids: Vec<u64>,
    /// Target annotation ids removed by full occlusion.
    pub removed_annotation_ids: Vec<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub mixup_lambda: Option<f64>,
}

/// Per-sample counters feeding [`RunStats`].
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct SampleCounters {
    pub pasted: u64,
    pub removed: u64,
    pub candidates: u64,
    pub visible_ratio_sum: f64,
}

/// One augmented sample in canvas coordinates.
///
/// Annotation ids are the ids of the input annotations they derive from; the
/// `origin` extra key says whether an instance belongs to the target or was
/// pasted. [`OutputAssembler`] assigns dataset-unique ids on emission.
#[derive(Debug, Clone)]
pub struct AugSample {
    pub index: u64,
    pub file_name: String,
    pub image: RgbImage,
    pub annotations: Vec<InstanceAnnotation>,
    pub provenance: SampleProvenance,
    pub counters: SampleCounters,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct RunStats {
    pub samples_emitted: u64,
    pub instances_pasted: u64,
    pub instances_removed: u64,
    /// Non-crowd target instances that went through the occlusion update.
    pub occlusion_candidates: u64,
    /// Mean over candidates of visible area / area before pasting.
    pub mean_visible_area_ratio: f64,
    pub items_skipped: u64,
    pub elapsed_secs: f64,
    pub throughput_samples_per_sec: f64,
    pub workers: usize,
    pub engine_version: String,
}

impl RunStats {
    fn add(&mut self, c: &SampleCounters, ratio_sum: &mut f64) {
        self.samples_emitted += 1;
        self.instances_pasted += c.pasted;
        self.instances_removed += c.removed;
        self.occlusion_candidates += c.candidates;
        *ratio_sum += c.visible_ratio_sum;
    }
}

static LIVE_STREAMS: AtomicUsize = AtomicUsize::new(0);

/// Open [`SampleStream`]s (and their worker pools) in this process.
pub fn live_streams() -> usize {
    LIVE_STREAMS.load(Ordering::SeqCst)
}

/// An augmentation engine bound to loaded datasets.
#[derive(Debug, Clone)]
pub struct Pipeline {
    config: AugConfig,
    plan: Plan,
}

impl Pipeline {
    /// Loads the datasets named in the config and builds the plan.
    pub fn from_config(config: AugConfig) -> Result<Self> {
        config.validate()?;
        let sup = &config.mix.supervised;
        let supervised = load_dataset(&sup.annotations, &sup.images)?;
        let pseudo = match &config.mix.pseudo {
            Some(p) => Some(load_dataset(&p.annotations, &p.images)?),
            None => None,
        };
        Self::with_datasets(config, supervised, pseudo)
    }

    /// Builds the plan over already loaded datasets. Pseudo annotations are
    /// filtered by the configured score threshold.
    pub fn with_datasets(config: AugConfig, supervised: Dataset, pseudo: Option<Dataset>) -> Result<Self> {
        config.validate()?;
        let pseudo = match pseudo {
            Some(p) => Some(Arc::new(filter_pseudo(&p, config.mix.pseudo_score_threshold)?)),
            None => None,
        };
        let supervised = Arc::new(supervised);
        let mut view = merge_pseudo(supervised.clone(), pseudo, &config.mix)?;
        if let Some(t) = config.rfs {
            view = view.with_rfs(t)?;
        }
        let len = config.num_samples.unwrap_or(supervised.images().len() as u64);
        let plan = Plan::new(&config, Arc::new(view), len)?;
        Ok(Pipeline { config, plan })
    }

    pub fn config(&self) -> &AugConfig {
        &self.config
    }

    pub fn plan(&self) -> &Plan {
        &self.plan
    }

    pub fn view(&self) -> &SamplingView {
        self.plan.view()
    }

    pub fn len(&self) -> u64 {
        self.plan.len()
    }

    pub fn is_empty(&self) -> bool {
        self.plan.is_empty()
    }

    fn load_transformed(&self, dataset: &Dataset, index: usize, params: &crate::TransformParams) -> Result<TransformedSample> {
        let record = &dataset.images()[index];
        let image = dataset.load_image(record.id)?;
        let annotations: Vec<InstanceAnnotation> = dataset.annotations_at(index).cloned().collect();
        apply(&image, &annotations, params, record.id, self.config.min_visible_pixels)
    }

    /// Produces item `index`. Pure in `(config, datasets, index)`.
    pub fn sample(&self, index: u64) -> Result<AugSample> {
        self.sample_item(&self.plan.item(index))
            .map_err(|e| Error::Item { index, source: Box::new(e) })
    }

    fn sample_item(&self, item: &PlanItem) -> Result<AugSample> {
        let view = self.plan.view();
        let target_ds = view.dataset(item.target.pool);
        let target_record = &target_ds.images()[item.target.index];
        let target = self.load_transformed(target_ds, item.target.index, &item.target_params)?;
        let stem = Path::new(&target_record.file_name)
            .file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_else(|| format!("image{}", target_record.id));
        let file_name = format!("{stem}_aug{}.png", item.index);
        let pseudo_target = item.target.pool == Pool::Pseudo;
        let mut provenance = SampleProvenance {
            mode: item.mode,
            target_pool: item.target.pool,
            target_image_id: target_record.id,
            source_image_id: item.source.as_ref().map(|s| s.image_id),
            pasted_annotation_ids: Vec::new(),
            removed_annotation_ids: Vec::new(),
            mixup_lambda: item.mixup_lambda,
        };
        let mut counters = SampleCounters::default();

        let tag = |mut a: InstanceAnnotation, origin: &str, pseudo: bool| {
            a.extra.insert("origin".into(), Value::String(origin.into()));
            if pseudo {
                a.extra.insert("pseudo".into(), Value::Bool(true));
            }
            a
        };

        let (image, annotations) = match (item.mode, &item.source) {
            (Mode::CopyPaste, Some(src)) => {
                let supervised = view.supervised();
                let mut source = self.load_transformed(supervised, src.index, &src.params)?;
                if item.paste_shift != (0, 0) {
                    source = translate(&source, item.paste_shift.0, item.paste_shift.1, self.config.min_visible_pixels);
                }
                let mut rng = item_rng(self.plan.seed(), item.index, Stream::Subset);
                let subset = select_subset(&source, self.config.paste_policy, &mut rng);
                let composed = paste(&target, &source, &subset, &self.config.blend, self.config.min_visible_pixels)?;
                counters.pasted = composed.pasted_annotations().len() as u64;
                counters.removed = composed.provenance.removed_annotation_ids.len() as u64;
                counters.candidates = composed.occlusion_candidates() as u64;
                counters.visible_ratio_sum = composed.visible_ratio_sum();
                provenance.pasted_annotation_ids = composed.provenance.pasted_annotation_ids.clone();
                provenance.removed_annotation_ids = composed.provenance.removed_annotation_ids.clone();
                let num_target = composed.target_annotations().len();
                let anns = composed
                    .annotations
                    .into_iter()
                    .enumerate()
                    .map(|(i, a)| {
                        if i < num_target {
                            tag(a, "target", pseudo_target)
                        } else {
                            tag(a, "pasted", false)
                        }
                    })
                    .collect();
                (composed.image, anns)
            }
            (Mode::Mixup, Some(src)) => {
                let supervised = view.supervised();
                let second = self.load_transformed(supervised, src.index, &src.params)?;
                let lambda = item.mixup_lambda.unwrap_or(0.5);
                let mixed = mixup(&target, &second, lambda)?;
                let n_first = target.annotations.len();
                let anns = mixed
                    .annotations
                    .into_iter()
                    .enumerate()
                    .map(|(i, w)| {
                        let mut a = if i < n_first {
                            tag(w.annotation, "target", pseudo_target)
                        } else {
                            tag(w.annotation, "mixed", false)
                        };
                        a.extra.insert("mixup_weight".into(), json!(w.weight));
                        a
                    })
                    .collect();
                (mixed.image, anns)
            }
            _ => {
                let anns = target
                    .annotations
                    .into_iter()
                    .map(|a| tag(a, "target", pseudo_target))
                    .collect();
                (target.image, anns)
            }
        };

        Ok(AugSample {
            index: item.index,
            file_name,
            image,
            annotations,
            provenance,
            counters,
        })
    }

    fn thread_pool(&self) -> Result<ThreadPool> {
        rayon::ThreadPoolBuilder::new()
            .num_threads(self.config.workers)
            .thread_name(|i| format!("copypaste-{i}"))
            .build()
            .map_err(|e| Error::InvalidArgument(format!("worker pool: {e}")))
    }

    fn chunk_len(&self) -> u64 {
        (self.config.workers as u64 * 4).max(8)
    }

    /// Runs the plan, handing samples to `consume` strictly in item order.
    pub fn run<F>(&self, mut consume: F) -> Result<RunStats>
    where
        F: FnMut(AugSample) -> Result<()>,
    {
        let started = Instant::now();
        let pool = self.thread_pool()?;
        let mut stats = RunStats {
            workers: self.config.workers,
            engine_version: crate::VERSION.to_string(),
            ..RunStats::default()
        };
        let mut ratio_sum = 0.0;
        let chunk = self.chunk_len();
        let mut start = 0;
        while start < self.len() {
            let end = (start + chunk).min(self.len());
            let results: Vec<Result<AugSample>> =
                pool.install(|| (start..end).into_par_iter().map(|k| self.sample(k)).collect());
            for r in results {
                match r {
                    Ok(sample) => {
                        stats.add(&sample.counters, &mut ratio_sum);
                        consume(sample)?;
                    }
                    Err(e) if self.config.on_error == ErrorPolicy::Skip => {
                        log::warn!("skipping {e}");
                        stats.items_skipped += 1;
                    }
                    Err(e) => return Err(e),
                }
            }
            start = end;
        }
        if stats.occlusion_candidates > 0 {
            stats.mean_visible_area_ratio = ratio_sum / stats.occlusion_candidates as f64;
        }
        stats.elapsed_secs = started.elapsed().as_secs_f64();
        if stats.elapsed_secs > 0.0 {
            stats.throughput_samples_per_sec = stats.samples_emitted as f64 / stats.elapsed_secs;
        }
        Ok(stats)
    }

    /// Writes `images/<stem>_aug<k>.png` and `annotations.json` under `out_dir`.
    pub fn run_to_dir(&self, out_dir: impl AsRef<Path>) -> Result<RunStats> {
        let out_dir = out_dir.as_ref();
        let image_dir = out_dir.join(IMAGE_DIR);
        std::fs::create_dir_all(&image_dir).map_err(|e| Error::io(&image_dir, e))?;
        let mut assembler = OutputAssembler::new(self);
        let stats = self.run(|sample| {
            let path = image_dir.join(&sample.file_name);
            save_png(&sample.image, &path)?;
            assembler.push(sample);
            Ok(())
        })?;
        let dataset = assembler.finish()?;
        write_dataset(&dataset, out_dir.join(ANNOTATION_FILE))?;
        Ok(stats)
    }

    /// In-process iterator over samples in plan order.
    pub fn stream(self: &Arc<Self>) -> Result<SampleStream> {
        let pool = self.thread_pool()?;
        LIVE_STREAMS.fetch_add(1, Ordering::SeqCst);
        Ok(SampleStream {
            assembler: OutputAssembler::new(self),
            pipeline: Arc::clone(self),
            pool: Some(pool),
            next: 0,
            buffer: VecDeque::new(),
        })
    }
}

pub const IMAGE_DIR: &str = "images";
pub const ANNOTATION_FILE: &str = "annotations.json";

pub fn save_png(image: &RgbImage, path: &Path) -> Result<()> {
    image
        .save_with_format(path, image::ImageFormat::Png)
        .map_err(|source| match source {
            image::ImageError::IoError(e) => Error::io(path, e),
            source => Error::Image {
                path: path.to_path_buf(),
                source,
            },
        })
}

/// Turns samples into COCO records with run-unique ids: image `k` gets id
/// `k + 1`, annotations are numbered from 1 in emission order and keep their
/// input id as `source_annotation_id`.
#[derive(Debug)]
pub struct OutputAssembler {
    images: Vec<ImageRecord>,
    annotations: Vec<InstanceAnnotation>,
    categories: Vec<CategoryRecord>,
    info: Map<String, Value>,
    next_annotation_id: u64,
}

impl OutputAssembler {
    pub fn new(pipeline: &Pipeline) -> Self {
        let mut info = Map::new();
        info.insert(
            "info".into(),
            json!({
                "description": "copypaste augmented dataset",
                "engine_version": crate::VERSION,
                "seed": pipeline.config().seed,
                "mode": pipeline.plan().mode(),
            }),
        );
        OutputAssembler {
            images: Vec::new(),
            annotations: Vec::new(),
            categories: pipeline.view().supervised().categories().to_vec(),
            info,
            next_annotation_id: 1,
        }
    }

    /// Records for one sample, advancing the annotation id counter.
    pub fn records(&mut self, sample: &AugSample) -> (ImageRecord, Vec<InstanceAnnotation>) {
        let mut record = ImageRecord::new(
            sample.index + 1,
            format!("{IMAGE_DIR}/{}", sample.file_name),
            sample.image.width(),
            sample.image.height(),
        );
        record.extra.insert(
            "provenance".into(),
            serde_json::to_value(&sample.provenance).expect("provenance serializes"),
        );
        let anns = sample
            .annotations
            .iter()
            .map(|a| {
                let mut a = a.clone();
                a.extra.insert("source_annotation_id".into(), a.id.into());
                a.id = self.next_annotation_id;
                a.image_id = record.id;
                self.next_annotation_id += 1;
                a
            })
            .collect();
        (record, anns)
    }

    pub fn push(&mut self, sample: AugSample) {
        let (record, anns) = self.records(&sample);
        self.images.push(record);
        self.annotations.extend(anns);
    }

    pub fn finish(self) -> Result<Dataset> {
        Dataset::with_extra(self.images, self.annotations, self.categories, self.info, PathBuf::new())
    }
}

/// A sample as the directory writer would record it.
#[derive(Debug, Clone)]
pub struct SampleRecord {
    pub index: u64,
    /// H×W×3, row-major, 8-bit.
    pub image: RgbImage,
    pub image_record: ImageRecord,
    pub annotations: Vec<InstanceAnnotation>,
    pub provenance: SampleProvenance,
}

impl SampleRecord {
    /// Annotation JSON objects with masks as `{"size": [h, w], "counts": str}`.
    pub fn annotation_records(&self) -> Vec<Value> {
        self.annotations
            .iter()
            .map(|a| serde_json::to_value(a).expect("annotation serializes"))
            .collect()
    }

    /// Dense 0/1 mask of annotation `i`, row-major.
    pub fn dense_mask(&self, i: usize) -> Result<crate::Bitmap> {
        let a = &self.annotations[i];
        a.segmentation.to_bitmap(self.image.height(), self.image.width())
    }
}

/// Pulls samples from a pipeline in plan order, computing them a chunk at a
/// time on its own worker pool.
pub struct SampleStream {
    assembler: OutputAssembler,
    pipeline: Arc<Pipeline>,
    pool: Option<ThreadPool>,
    next: u64,
    buffer: VecDeque<Result<AugSample>>,
}

impl SampleStream {
    pub fn is_closed(&self) -> bool {
        self.pool.is_none()
    }

    /// `Ok(None)` when exhausted, [`Error::Closed`] after [`SampleStream::close`].
    pub fn next_sample(&mut self) -> Result<Option<AugSample>> {
        let Some(pool) = &self.pool else {
            return Err(Error::Closed);
        };
        if self.buffer.is_empty() {
            let len = self.pipeline.len();
            if self.next >= len {
                return Ok(None);
            }
            let end = (self.next + self.pipeline.chunk_len()).min(len);
            let p = &self.pipeline;
            let start = self.next;
            let results: Vec<Result<AugSample>> =
                pool.install(|| (start..end).into_par_iter().map(|k| p.sample(k)).collect());
            self.buffer.extend(results);
            self.next = end;
        }
        self.buffer.pop_front().transpose()
    }

    /// Like [`SampleStream::next_sample`], but with the ids, file name and
    /// annotation records the directory writer would emit for the same item.
    /// Mixing the two calls on one stream desynchronizes annotation ids.
    pub fn next_record(&mut self) -> Result<Option<SampleRecord>> {
        let Some(sample) = self.next_sample()? else {
            return Ok(None);
        };
        let (image_record, annotations) = self.assembler.records(&sample);
        Ok(Some(SampleRecord {
            index: sample.index,
            image: sample.image,
            image_record,
            annotations,
            provenance: sample.provenance,
        }))
    }

    /// Stops the workers. Closing twice is a no-op.
    pub fn close(&mut self) {
        if self.pool.take().is_some() {
            self.buffer.clear();
            LIVE_STREAMS.fetch_sub(1, Ordering::SeqCst);
        }
    }
}

impl Iterator for SampleStream {
    type Item = Result<AugSample>;

    fn next(&mut self) -> Option<Self::Item> {
        match self.next_sample() {
            Ok(Some(s)) => Some(Ok(s)),
            Ok(None) | Err(Error::Closed) => None,
            Err(e) => Some(Err(e)),
        }
    }
}

impl Drop for SampleStream {
    fn drop(&mut self) {
        self.close();
    }
}
