use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::copy_paste::{BlendConfig, PastePolicy};
use crate::transforms::{Canvas, JitterMode, PadAnchor, DEFAULT_PAD_VALUE};
use crate::{Error, Result};

pub const ENV_SEED: &str = "COPYPASTE_SEED";
pub const ENV_WORKERS: &str = "COPYPASTE_WORKERS";

/// Location of a COCO JSON file and the directory its `file_name`s resolve against.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DatasetSource {
    pub annotations: PathBuf,
    pub images: PathBuf,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PasteTargets {
    #[default]
    SupervisedOnly,
    PseudoOnly,
    Both,
}

/// Instances are only ever copied from ground truth.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PasteSources {
    #[default]
    SupervisedOnly,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DataMixSpec {
    pub supervised: DatasetSource,
    #[serde(default)]
    pub pseudo: Option<DatasetSource>,
    /// Probability that a target is drawn from the supervised set when
    /// `paste_targets = both`.
    #[serde(default = "half")]
    pub batch_fraction_supervised: f64,
    #[serde(default)]
    pub paste_targets: PasteTargets,
    #[serde(default)]
    pub paste_sources: PasteSources,
    /// Pseudo annotations scoring below this are discarded on load.
    #[serde(default = "half")]
    pub pseudo_score_threshold: f64,
}

impl DataMixSpec {
    pub fn supervised_only(annotations: impl Into<PathBuf>, images: impl Into<PathBuf>) -> Self {
        DataMixSpec {
            supervised: DatasetSource {
                annotations: annotations.into(),
                images: images.into(),
            },
            pseudo: None,
            batch_fraction_supervised: 0.5,
            paste_targets: PasteTargets::SupervisedOnly,
            paste_sources: PasteSources::SupervisedOnly,
            pseudo_score_threshold: 0.5,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ErrorPolicy {
    /// First failing item aborts the run.
    #[default]
    Abort,
    /// Failing items are logged and left out.
    Skip,
}

/// Complete, serializable recipe of an augmentation run. Field names are the
/// config file keys.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AugConfig {
    /// Canvas `[height, width]`.
    pub target_size: [u32; 2],
    #[serde(default = "lsj")]
    pub main_jitter: JitterMode,
    #[serde(default = "lsj")]
    pub pasted_jitter: JitterMode,
    #[serde(default)]
    pub paste_policy: PastePolicy,
    #[serde(default)]
    pub blend: BlendConfig,
    #[serde(default = "yes")]
    pub copy_paste_enabled: bool,
    #[serde(default)]
    pub mixup_enabled: bool,
    /// Mixup λ ~ Beta(mixup_beta, mixup_beta).
    #[serde(default = "default_mixup_beta")]
    pub mixup_beta: f64,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub min_visible_pixels: u64,
    #[serde(default = "one")]
    pub workers: usize,
    /// Repeat factor sampling threshold `t`; off when absent.
    #[serde(default)]
    pub rfs: Option<f64>,
    /// Defaults to the number of supervised images.
    #[serde(default)]
    pub num_samples: Option<u64>,
    #[serde(default = "default_pad")]
    pub pad_value: [u8; 3],
    #[serde(default)]
    pub pad_anchor: PadAnchor,
    /// Maximum random translation of the pasted layer in pixels; 0 disables it.
    #[serde(default)]
    pub max_paste_shift: u32,
    #[serde(default)]
    pub on_error: ErrorPolicy,
    pub mix: DataMixSpec,
}

fn lsj() -> JitterMode {
    JitterMode::Lsj
}
fn yes() -> bool {
    true
}
fn one() -> usize {
    1
}
fn half() -> f64 {
    0.5
}
fn default_mixup_beta() -> f64 {
    1.5
}
fn default_pad() -> [u8; 3] {
    DEFAULT_PAD_VALUE
}

/// What each plan item produces.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    JitterOnly,
    CopyPaste,
    Mixup,
}

impl AugConfig {
    /// Defaults for everything except the canvas size and the supervised data.
    pub fn new(target_size: [u32; 2], mix: DataMixSpec) -> Self {
        AugConfig {
            target_size,
            main_jitter: JitterMode::Lsj,
            pasted_jitter: JitterMode::Lsj,
            paste_policy: PastePolicy::default(),
            blend: BlendConfig::default(),
            copy_paste_enabled: true,
            mixup_enabled: false,
            mixup_beta: default_mixup_beta(),
            seed: 0,
            min_visible_pixels: 0,
            workers: 1,
            rfs: None,
            num_samples: None,
            pad_value: DEFAULT_PAD_VALUE,
            pad_anchor: PadAnchor::TopLeft,
            max_paste_shift: 0,
            on_error: ErrorPolicy::Abort,
            mix,
        }
    }

    pub fn from_toml_str(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::config(toml_field(&e), e.message().to_string()))
    }

    pub fn from_json_str(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::config("<json>", e.to_string()))
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string(self).expect("config serializes to TOML")
    }

    /// Reads a `.toml` or `.json` config. Relative dataset paths are resolved
    /// against the config file's directory.
    pub fn from_path(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut config = match path.extension().and_then(|e| e.to_str()) {
            Some("json") => Self::from_json_str(&text)?,
            _ => Self::from_toml_str(&text)?,
        };
        if let Some(dir) = path.parent() {
            config.resolve_paths(dir);
        }
        Ok(config)
    }

    pub fn resolve_paths(&mut self, base: &Path) {
        let fix = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        fix(&mut self.mix.supervised.annotations);
        fix(&mut self.mix.supervised.images);
        if let Some(p) = &mut self.mix.pseudo {
            fix(&mut p.annotations);
            fix(&mut p.images);
        }
    }

    /// Applies `COPYPASTE_SEED` / `COPYPASTE_WORKERS` when set.
    pub fn apply_env_overrides(&mut self) -> Result<()> {
        self.apply_overrides_from(|k| std::env::var(k).ok())
    }

    pub fn apply_overrides_from(&mut self, get: impl Fn(&str) -> Option<String>) -> Result<()> {
        if let Some(v) = get(ENV_SEED) {
            self.seed = v
                .trim()
                .parse()
                .map_err(|_| Error::config(ENV_SEED, format!("not an unsigned integer: {v:?}")))?;
        }
        if let Some(v) = get(ENV_WORKERS) {
            self.workers = v
                .trim()
                .parse()
                .map_err(|_| Error::config(ENV_WORKERS, format!("not an unsigned integer: {v:?}")))?;
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<()> {
        let [h, w] = self.target_size;
        if h == 0 || w == 0 {
            return Err(Error::config("target_size", format!("{h}x{w} has a zero side")));
        }
        self.main_jitter.validate().map_err(|m| Error::config("main_jitter", m))?;
        self.pasted_jitter.validate().map_err(|m| Error::config("pasted_jitter", m))?;
        self.paste_policy.validate().map_err(|m| Error::config("paste_policy", m))?;
        self.blend.validate().map_err(|m| Error::config("blend", m))?;
        if self.copy_paste_enabled && self.mixup_enabled {
            return Err(Error::config(
                "mixup_enabled",
                "copy_paste_enabled and mixup_enabled are mutually exclusive",
            ));
        }
        if !(self.mixup_beta > 0.0 && self.mixup_beta.is_finite()) {
            return Err(Error::config("mixup_beta", "must be positive"));
        }
        if self.workers == 0 {
            return Err(Error::config("workers", "must be at least 1"));
        }
        if let Some(t) = self.rfs {
            if !(t > 0.0 && t.is_finite()) {
                return Err(Error::config("rfs", format!("threshold {t} must be positive")));
            }
        }
        let mix = &self.mix;
        if !(0.0..=1.0).contains(&mix.batch_fraction_supervised) {
            return Err(Error::config(
                "mix.batch_fraction_supervised",
                format!("{} outside [0, 1]", mix.batch_fraction_supervised),
            ));
        }
        if !(0.0..=1.0).contains(&mix.pseudo_score_threshold) {
            return Err(Error::config(
                "mix.pseudo_score_threshold",
                format!("{} outside [0, 1]", mix.pseudo_score_threshold),
            ));
        }
        if mix.paste_targets != PasteTargets::SupervisedOnly && mix.pseudo.is_none() {
            return Err(Error::config(
                "mix.pseudo",
                "required when paste_targets is pseudo_only or both",
            ));
        }
        Ok(())
    }

    pub fn mode(&self) -> Mode {
        if self.copy_paste_enabled {
            Mode::CopyPaste
        } else if self.mixup_enabled {
            Mode::Mixup
        } else {
            Mode::JitterOnly
        }
    }

    pub fn canvas(&self) -> Canvas {
        Canvas {
            height: self.target_size[0],
            width: self.target_size[1],
            pad_value: self.pad_value,
            anchor: self.pad_anchor,
        }
    }
}

fn toml_field(e: &toml::de::Error) -> String {
    // toml reports unknown or mistyped keys in the message; the span is the best
    // field locator it offers
    let msg = e.message();
    if let Some(rest) = msg.strip_prefix("unknown field `") {
        if let Some(end) = rest.find('`') {
            return rest[..end].to_string();
        }
    }
    "<toml>".to_string()
}
