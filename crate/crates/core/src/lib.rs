//! Copy-Paste data augmentation for instance segmentation.
//!
//! The crate turns COCO-style datasets into augmented datasets (or in-process
//! sample streams) by jittering two images independently, pasting a random
//! subset of instances from one onto the other, and repairing the labels of
//! everything the pasted layer occludes.
//!
//! Modules, bottom-up:
//!
//! - [`annotations`]: dataset model, COCO JSON I/O and the mask codec
//!   (polygons, bitmaps, RLE and COCO's compressed RLE strings).
//! - [`transforms`]: standard and large scale jittering, flips, crop and pad.
//! - [`copy_paste`]: subset selection, alpha compositing, occlusion updates
//!   and the mixup baseline.
//! - [`longtail`]: repeat factor sampling and class-balanced loss weights.
//! - [`pipeline`]: configuration, deterministic planning, pseudo-label mixing
//!   and parallel execution.
//! - [`visualize`]: overlay rendering for inspection.
//! - [`cli`]: the `copypaste` command line.
//!
//! Everything random is driven by counter-keyed generators, so the output of a
//! run depends only on its configuration and inputs, never on worker count.

pub mod annotations;
pub mod cli;
pub mod copy_paste;
mod error;
pub mod longtail;
pub mod pipeline;
pub mod synthetic;
pub mod transforms;
pub mod visualize;

pub use error::{Error, Result};

pub use annotations::{
    BBox, Bitmap, CategoryRecord, Dataset, ImageRecord, InstanceAnnotation, Rle, SegMask,
};
pub use copy_paste::{BlendConfig, ComposedSample, PastePolicy};
pub use pipeline::{AugConfig, Pipeline, RunStats};
pub use transforms::{JitterMode, TransformParams, TransformedSample};

/// Engine version, also reported by the CLI and embedded in run statistics.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");
