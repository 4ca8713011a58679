//! The `copypaste` command line.
//!
//! Exit codes: 0 on success, 2 for usage, configuration and input errors, 1
//! for failures while running.

use std::collections::BTreeMap;
use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use clap::{Parser, Subcommand, ValueEnum};
use serde_json::json;

use crate::annotations::{load_dataset, write_dataset};
use crate::longtail::{self, ClassWeights, RepeatFactorTable, DEFAULT_CB_BETA, DEFAULT_RFS_THRESHOLD};
use crate::pipeline::{filter_pseudo, merge_pseudo, save_png, AugConfig, DataMixSpec, PasteTargets, Pipeline};
use crate::{Error, Result};

#[derive(Debug, Parser)]
#[command(name = "copypaste", version = crate::VERSION, about = "Copy-Paste augmentation for instance segmentation")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum TableFormat {
    Csv,
    Json,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Write an augmented dataset; run statistics go to stdout as JSON.
    Augment {
        /// TOML or JSON run configuration.
        #[arg(long)]
        config: PathBuf,
        /// Output directory (gets images/ and annotations.json).
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        workers: Option<usize>,
        #[arg(long)]
        num_samples: Option<u64>,
        /// Also write the statistics to this file.
        #[arg(long)]
        stats: Option<PathBuf>,
    },
    /// Per-category frequencies and repeat factors.
    Rfs {
        #[arg(long)]
        dataset: PathBuf,
        #[arg(long, default_value_t = DEFAULT_RFS_THRESHOLD)]
        t: f64,
        #[arg(long, value_enum, default_value_t = TableFormat::Csv)]
        format: TableFormat,
        /// Write here instead of stdout.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Class-balanced loss weights from instance counts.
    Cbweights {
        #[arg(long)]
        dataset: PathBuf,
        #[arg(long, default_value_t = DEFAULT_CB_BETA)]
        beta: f64,
        #[arg(long, value_enum, default_value_t = TableFormat::Csv)]
        format: TableFormat,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Merge ground truth with score-filtered pseudo labels into one COCO file.
    MergePseudo {
        #[arg(long)]
        supervised: PathBuf,
        #[arg(long)]
        supervised_images: PathBuf,
        #[arg(long)]
        pseudo: PathBuf,
        #[arg(long)]
        pseudo_images: PathBuf,
        #[arg(long, default_value_t = 0.5)]
        score_threshold: f64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Summarize a dataset as JSON.
    Inspect {
        #[arg(long)]
        dataset: PathBuf,
    },
    /// Render one image with its annotations overlaid.
    Visualize {
        #[arg(long)]
        dataset: PathBuf,
        #[arg(long)]
        images: PathBuf,
        #[arg(long)]
        image_id: u64,
        #[arg(long)]
        out: PathBuf,
    },
}

/// Parses `args` (including the program name) and runs the command.
pub fn run<I, T>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let text = e.render().to_string();
            let sink: &mut dyn Write = if code == 0 { stdout } else { stderr };
            let _ = sink.write_all(text.as_bytes());
            return code;
        }
    };
    match execute(cli.command, stdout) {
        Ok(()) => 0,
        Err(e) => {
            let _ = writeln!(stderr, "error: {e}");
            if e.is_usage() {
                2
            } else {
                1
            }
        }
    }
}

fn no_images() -> PathBuf {
    PathBuf::new()
}

fn emit(out: Option<&Path>, stdout: &mut dyn Write, bytes: &[u8]) -> Result<()> {
    match out {
        Some(p) => std::fs::write(p, bytes).map_err(|e| Error::io(p, e)),
        None => stdout.write_all(bytes).map_err(|e| Error::io("<stdout>", e)),
    }
}

fn to_json<T: serde::Serialize>(v: &T) -> Vec<u8> {
    let mut s = serde_json::to_vec_pretty(v).expect("serializable");
    s.push(b'\n');
    s
}

pub fn execute(command: Command, stdout: &mut dyn Write) -> Result<()> {
    match command {
        Command::Augment {
            config,
            out,
            seed,
            workers,
            num_samples,
            stats,
        } => {
            let mut cfg = AugConfig::from_path(&config)?;
            cfg.apply_env_overrides()?;
            if let Some(s) = seed {
                cfg.seed = s;
            }
            if let Some(w) = workers {
                cfg.workers = w;
            }
            if let Some(n) = num_samples {
                cfg.num_samples = Some(n);
            }
            let pipeline = Pipeline::from_config(cfg)?;
            let run_stats = pipeline.run_to_dir(&out)?;
            let bytes = to_json(&run_stats);
            if let Some(p) = stats {
                std::fs::write(&p, &bytes).map_err(|e| Error::io(&p, e))?;
            }
            emit(None, stdout, &bytes)
        }
        Command::Rfs { dataset, t, format, out } => {
            let d = load_dataset(&dataset, no_images())?;
            let table = RepeatFactorTable::build(&d, t)?;
            let bytes = match format {
                TableFormat::Json => to_json(&table),
                TableFormat::Csv => {
                    let mut buf = Vec::new();
                    table.write_csv(&mut buf).map_err(|e| Error::io("<csv>", e))?;
                    buf
                }
            };
            emit(out.as_deref(), stdout, &bytes)
        }
        Command::Cbweights {
            dataset,
            beta,
            format,
            out,
        } => {
            let d = load_dataset(&dataset, no_images())?;
            if d.is_empty() {
                return Err(Error::InvalidArgument("dataset has no images".into()));
            }
            let counts = longtail::instance_counts(&d);
            let weights: ClassWeights = longtail::class_balanced_weights(&counts, beta)?;
            let names: BTreeMap<u64, String> = d.categories().iter().map(|c| (c.id, c.name.clone())).collect();
            let bytes = match format {
                TableFormat::Json => to_json(&weights),
                TableFormat::Csv => {
                    let mut buf = Vec::new();
                    weights.write_csv(&mut buf, &names).map_err(|e| Error::io("<csv>", e))?;
                    buf
                }
            };
            emit(out.as_deref(), stdout, &bytes)
        }
        Command::MergePseudo {
            supervised,
            supervised_images,
            pseudo,
            pseudo_images,
            score_threshold,
            out,
        } => {
            let sup = load_dataset(&supervised, &supervised_images)?;
            let ps = filter_pseudo(&load_dataset(&pseudo, &pseudo_images)?, score_threshold)?;
            let mut spec = DataMixSpec::supervised_only(&supervised, &supervised_images);
            spec.paste_targets = PasteTargets::Both;
            spec.pseudo_score_threshold = score_threshold;
            let view = merge_pseudo(Arc::new(sup), Some(Arc::new(ps)), &spec)?;
            let merged = view.merged_dataset()?;
            write_dataset(&merged, &out)?;
            let summary = json!({
                "images": merged.images().len(),
                "annotations": merged.annotations().len(),
                "out": out,
            });
            emit(None, stdout, &to_json(&summary))
        }
        Command::Inspect { dataset } => {
            let d = load_dataset(&dataset, no_images())?;
            emit(None, stdout, &to_json(&inspect_summary(&d)))
        }
        Command::Visualize {
            dataset,
            images,
            image_id,
            out,
        } => {
            let d = load_dataset(&dataset, &images)?;
            if d.image(image_id).is_none() {
                return Err(Error::InvalidArgument(format!("unknown image id {image_id}")));
            }
            let img = d.load_image(image_id)?;
            let anns: Vec<_> = d.annotations_for(image_id).into_iter().cloned().collect();
            let overlay = crate::visualize::render_overlay(&img, &anns)?;
            save_png(&overlay, &out)
        }
    }
}

/// Counts by category, segmentation kind and crowd flag.
pub fn inspect_summary(d: &crate::Dataset) -> serde_json::Value {
    let mut kinds: BTreeMap<&str, u64> = BTreeMap::new();
    let mut per_category: BTreeMap<u64, u64> = BTreeMap::new();
    let mut crowd = 0;
    for a in d.annotations() {
        *kinds.entry(a.segmentation.kind()).or_default() += 1;
        *per_category.entry(a.category_id).or_default() += 1;
        crowd += a.iscrowd as u64;
    }
    let categories: Vec<_> = d
        .categories()
        .iter()
        .map(|c| json!({"id": c.id, "name": c.name, "instances": per_category.get(&c.id).copied().unwrap_or(0)}))
        .collect();
    let empty_images = d.index().iter().filter(|v| v.is_empty()).count();
    json!({
        "images": d.images().len(),
        "annotations": d.annotations().len(),
        "crowd_annotations": crowd,
        "images_without_annotations": empty_images,
        "segmentation_kinds": kinds,
        "categories": categories,
    })
}
