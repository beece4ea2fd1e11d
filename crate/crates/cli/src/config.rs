//! Resolved run configuration and its `run.json` form.

use std::path::{Path, PathBuf};

use roiaug_core::preprocess::{DEFAULT_TARGET_SIZE, DEFAULT_THRESHOLD_FRACTION};
use roiaug_core::{relative_path, AlphaRange, Split, SplitSpec, Strategy};
use serde::{Deserialize, Serialize};

use crate::error::CliError;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Command {
    Validate,
    Preprocess,
    Split,
    Augment,
    Evaluate,
    Report,
}

impl Command {
    fn needs_out(self) -> bool {
        matches!(
            self,
            Command::Preprocess | Command::Split | Command::Augment
        )
    }
}

/// Flat key/value configuration shared by every command. Options that do
/// not apply to a command stay `None` and are omitted from `run.json`.
///
/// `workers` only affects wall-clock time and is not recorded.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub command: Command,
    pub manifest: PathBuf,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub image_root: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub out: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub strategy: Option<Strategy>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub count: Option<u32>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub alpha_low: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub alpha_high: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub target_width: Option<u32>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub target_height: Option<u32>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub threshold: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub train_ratio: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub val_ratio: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub test_ratio: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub crop_boxes: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub predictions: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub split: Option<Split>,
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    pub force: bool,
    #[serde(skip, default = "default_workers")]
    pub workers: usize,
}

fn keep<T>(on: bool, v: &mut Option<T>) {
    if !on {
        *v = None;
    }
}

fn default_workers() -> usize {
    1
}

impl RunConfig {
    pub fn new(command: Command, manifest: impl Into<PathBuf>) -> Self {
        Self {
            command,
            manifest: manifest.into(),
            image_root: None,
            out: None,
            seed: None,
            strategy: None,
            count: None,
            alpha_low: None,
            alpha_high: None,
            target_width: None,
            target_height: None,
            threshold: None,
            train_ratio: None,
            val_ratio: None,
            test_ratio: None,
            crop_boxes: None,
            predictions: None,
            split: None,
            force: false,
            workers: 1,
        }
    }

    /// Fill command defaults, drop options the command ignores, and check
    /// every numeric flag against its domain.
    pub fn resolve(mut self) -> Result<Self, CliError> {
        let c = self.command;
        if self.workers == 0 {
            return Err(CliError::usage("--workers must be at least 1"));
        }
        if c.needs_out() && self.out.is_none() {
            return Err(CliError::usage(
                format!("{c:?} requires --out").to_lowercase(),
            ));
        }
        if self.image_root.is_none() {
            let parent = self.manifest.parent().filter(|p| !p.as_os_str().is_empty());
            self.image_root = Some(parent.unwrap_or(Path::new(".")).to_path_buf());
        }

        let pre = c == Command::Preprocess;
        let aug = c == Command::Augment;
        let split = c == Command::Split;
        keep(pre, &mut self.threshold);
        keep(pre, &mut self.target_width);
        keep(pre, &mut self.target_height);
        keep(pre, &mut self.crop_boxes);
        keep(aug, &mut self.strategy);
        keep(aug, &mut self.count);
        keep(aug, &mut self.alpha_low);
        keep(aug, &mut self.alpha_high);
        keep(split, &mut self.train_ratio);
        keep(split, &mut self.val_ratio);
        keep(split, &mut self.test_ratio);
        keep(aug || split, &mut self.seed);
        keep(c == Command::Evaluate, &mut self.predictions);
        keep(c == Command::Evaluate, &mut self.split);
        self.force &= split;

        if pre {
            let t = *self.threshold.get_or_insert(DEFAULT_THRESHOLD_FRACTION);
            if !(t > 0.0 && t < 1.0) {
                return Err(CliError::usage(format!(
                    "--threshold {t} must lie in (0, 1)"
                )));
            }
            let w = *self.target_width.get_or_insert(DEFAULT_TARGET_SIZE.0);
            let h = *self.target_height.get_or_insert(DEFAULT_TARGET_SIZE.1);
            if w == 0 || h == 0 {
                return Err(CliError::usage(format!(
                    "--target {w}x{h} must be at least 1x1"
                )));
            }
        }
        if aug || split {
            self.seed.get_or_insert(0);
        }
        if aug {
            self.strategy.get_or_insert(Strategy::Transparency);
            if self.count.is_none() {
                return Err(CliError::usage("augment requires --count"));
            }
            let d = AlphaRange::default();
            self.alpha_range_with(d.low(), d.high())?;
        }
        if split {
            if self.train_ratio.is_none() {
                return Err(CliError::usage("split requires --ratios TRAIN,VAL,TEST"));
            }
            self.split_spec()?;
        }
        if c == Command::Evaluate && self.predictions.is_none() {
            return Err(CliError::usage("evaluate requires --predictions"));
        }
        Ok(self)
    }

    fn alpha_range_with(&mut self, low: f64, high: f64) -> Result<AlphaRange, CliError> {
        let lo = *self.alpha_low.get_or_insert(low);
        let hi = *self.alpha_high.get_or_insert(high);
        AlphaRange::new(lo, hi).map_err(CliError::from)
    }

    pub fn alpha_range(&self) -> Result<AlphaRange, CliError> {
        let d = AlphaRange::default();
        AlphaRange::new(
            self.alpha_low.unwrap_or(d.low()),
            self.alpha_high.unwrap_or(d.high()),
        )
        .map_err(CliError::from)
    }

    pub fn split_spec(&self) -> Result<SplitSpec, CliError> {
        SplitSpec::new(
            self.train_ratio.unwrap_or(0.0),
            self.val_ratio.unwrap_or(0.0),
            self.test_ratio.unwrap_or(0.0),
            self.seed.unwrap_or(0),
        )
        .map_err(CliError::from)
    }

    pub fn image_root(&self) -> &Path {
        self.image_root.as_deref().unwrap_or(Path::new("."))
    }

    fn paths_mut(&mut self) -> [&mut Option<PathBuf>; 4] {
        [
            &mut self.image_root,
            &mut self.crop_boxes,
            &mut self.predictions,
            &mut self.out,
        ]
    }

    /// `run.json` text: paths are stored relative to `dir`, the directory the
    /// file is written into, so a tree can be moved and replayed.
    pub fn to_run_json(&self, dir: &Path) -> String {
        let mut rel = self.clone();
        rel.manifest = PathBuf::from(relative_path(&self.manifest, dir));
        for p in rel.paths_mut().into_iter().flatten() {
            *p = PathBuf::from(relative_path(p, dir));
        }
        let mut s = serde_json::to_string_pretty(&rel).expect("config serializes");
        s.push('\n');
        s
    }

    /// Inverse of [`RunConfig::to_run_json`] for a file living in `dir`.
    pub fn from_run_json(text: &str, dir: &Path) -> Result<Self, CliError> {
        let mut cfg: RunConfig = serde_json::from_str(text)
            .map_err(|e| CliError::usage(format!("bad run.json: {e}")))?;
        if cfg.manifest.is_relative() {
            cfg.manifest = dir.join(&cfg.manifest);
        }
        for p in cfg.paths_mut().into_iter().flatten() {
            if p.is_relative() {
                *p = dir.join(&*p);
            }
        }
        Ok(cfg)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_and_pruning() {
        let mut cfg = RunConfig::new(Command::Preprocess, "data/m.csv");
        cfg.out = Some("out".into());
        cfg.count = Some(3);
        let r = cfg.resolve().unwrap();
        assert_eq!(r.image_root, Some(PathBuf::from("data")));
        assert_eq!((r.target_width, r.target_height), (Some(1024), Some(768)));
        assert_eq!(r.threshold, Some(0.05));
        assert_eq!(r.count, None);
    }

    #[test]
    fn domain_errors_are_usage_errors() {
        let mut cfg = RunConfig::new(Command::Augment, "m.csv");
        cfg.out = Some("o".into());
        assert_eq!(cfg.clone().resolve().unwrap_err().code, crate::exit::USAGE);
        cfg.count = Some(1);
        cfg.alpha_low = Some(0.95);
        assert_eq!(cfg.clone().resolve().unwrap_err().code, crate::exit::USAGE);
        cfg.alpha_low = None;
        let r = cfg.resolve().unwrap();
        assert_eq!(
            (r.alpha_low, r.alpha_high, r.seed),
            (Some(0.1), Some(0.9), Some(0))
        );

        let mut s = RunConfig::new(Command::Split, "m.csv");
        s.out = Some("o".into());
        (s.train_ratio, s.val_ratio, s.test_ratio) = (Some(0.8), Some(0.1), Some(0.2));
        assert_eq!(s.resolve().unwrap_err().code, crate::exit::USAGE);
    }

    #[test]
    fn run_json_round_trips_through_relative_paths() {
        let dir = Path::new("/work/run/out");
        let mut cfg = RunConfig::new(Command::Split, "/work/run/data/m.csv");
        cfg.out = Some(dir.to_path_buf());
        (cfg.train_ratio, cfg.val_ratio, cfg.test_ratio) = (Some(0.8), Some(0.0), Some(0.2));
        let cfg = cfg.resolve().unwrap();
        let text = cfg.to_run_json(dir);
        assert!(text.contains("\"manifest\": \"../data/m.csv\""), "{text}");
        assert!(!text.contains("workers"));
        let back = RunConfig::from_run_json(&text, dir).unwrap();
        assert_eq!(back.split_spec().unwrap(), cfg.split_spec().unwrap());
        assert_eq!(
            roiaug_core::relative_path(&back.manifest, dir),
            "../data/m.csv"
        );
    }
}
