//! Configuration, planning and execution of augmentation runs.

mod config;
mod mix;
mod plan;
mod rng;
mod run;

pub use config::{
    AugConfig, DataMixSpec, DatasetSource, ErrorPolicy, Mode, PasteSources, PasteTargets, ENV_SEED, ENV_WORKERS,
};
pub use mix::{check_categories_compatible, filter_pseudo, merge_pseudo, Pool, SamplingView, TargetRef};
pub use plan::{Plan, PlanItem, SourceDraw};
pub use rng::{item_rng, Stream};
pub use run::{
    live_streams, save_png, AugSample, OutputAssembler, Pipeline, RunStats, SampleCounters, SampleProvenance,
    SampleRecord, SampleStream, ANNOTATION_FILE, IMAGE_DIR,
};
