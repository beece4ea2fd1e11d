use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use roiaug_cli::{exit, replay, run, Command, RunConfig};
use roiaug_core::{Split, Strategy};

/// ROI-aware augmentation pipeline for lesion-annotated grayscale images.
#[derive(Parser)]
#[command(name = "roiaug", version)]
struct Cli {
    /// Worker threads for per-image work; never changes outputs.
    #[arg(long, global = true, default_value_t = 1)]
    workers: usize,

    #[command(subcommand)]
    command: Cmd,
}

#[derive(Args)]
struct Common {
    /// Manifest CSV.
    #[arg(long)]
    manifest: PathBuf,
    /// Directory image paths are relative to [default: the manifest's directory].
    #[arg(long)]
    image_root: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Cmd {
    /// Check files, image formats and lesion boxes; exit 1 on any violation.
    Validate {
        #[command(flatten)]
        common: Common,
    },
    /// Crop to the breast, flip right breasts, resize to a fixed size.
    Preprocess {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        out: PathBuf,
        /// Output size as WIDTHxHEIGHT.
        #[arg(long, value_parser = parse_size, default_value = "1024x768")]
        target: (u32, u32),
        /// Foreground threshold as a fraction of full scale.
        #[arg(long, default_value_t = 0.05)]
        threshold: f64,
        /// Sidecar CSV `sample_id,x_min,y_min,x_max,y_max` overriding detection.
        #[arg(long)]
        crop_boxes: Option<PathBuf>,
    },
    /// Stratified train/val/test assignment.
    Split {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        out: PathBuf,
        /// TRAIN,VAL,TEST fractions summing to 1.
        #[arg(long, value_parser = parse_triple)]
        ratios: (f64, f64, f64),
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Reassign samples that already have a split.
        #[arg(long)]
        force: bool,
    },
    /// Generate transparency or CutMix samples from train-split lesions.
    Augment {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value = "transparency")]
        strategy: Strategy,
        /// Augmented replicas per eligible source.
        #[arg(long)]
        count: u32,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// LOW,HIGH range for the transparency alpha.
        #[arg(long, value_parser = parse_pair, default_value = "0.1,0.9")]
        alpha: (f64, f64),
    },
    /// Score a prediction CSV against manifest labels.
    Evaluate {
        #[command(flatten)]
        common: Common,
        /// CSV `sample_id,predicted_label`.
        #[arg(long)]
        predictions: PathBuf,
        /// Score only this split.
        #[arg(long)]
        split: Option<Split>,
        /// Also write metrics.csv here.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Per-class, per-split sample counts.
    Report {
        #[command(flatten)]
        common: Common,
        /// Also write split_report.csv here.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Re-run a recorded run.json.
    Replay { run_json: PathBuf },
}

fn parse_floats(s: &str, n: usize) -> Result<Vec<f64>, String> {
    let v: Vec<f64> = s
        .split(',')
        .map(|p| p.trim().parse::<f64>().map_err(|e| format!("{p:?}: {e}")))
        .collect::<Result<_, _>>()?;
    if v.len() == n {
        Ok(v)
    } else {
        Err(format!("expected {n} comma-separated numbers"))
    }
}

fn parse_triple(s: &str) -> Result<(f64, f64, f64), String> {
    parse_floats(s, 3).map(|v| (v[0], v[1], v[2]))
}

fn parse_pair(s: &str) -> Result<(f64, f64), String> {
    parse_floats(s, 2).map(|v| (v[0], v[1]))
}

fn parse_size(s: &str) -> Result<(u32, u32), String> {
    let (w, h) = s.split_once(['x', 'X']).ok_or("expected WIDTHxHEIGHT")?;
    let n = |p: &str| p.trim().parse::<u32>().map_err(|e| format!("{p:?}: {e}"));
    Ok((n(w)?, n(h)?))
}

fn config(cmd: Cmd) -> RunConfig {
    let base = |command, common: Common| {
        let mut c = RunConfig::new(command, common.manifest);
        c.image_root = common.image_root;
        c
    };
    match cmd {
        Cmd::Validate { common } => base(Command::Validate, common),
        Cmd::Preprocess {
            common,
            out,
            target,
            threshold,
            crop_boxes,
        } => {
            let mut c = base(Command::Preprocess, common);
            c.out = Some(out);
            (c.target_width, c.target_height) = (Some(target.0), Some(target.1));
            c.threshold = Some(threshold);
            c.crop_boxes = crop_boxes;
            c
        }
        Cmd::Split {
            common,
            out,
            ratios,
            seed,
            force,
        } => {
            let mut c = base(Command::Split, common);
            c.out = Some(out);
            (c.train_ratio, c.val_ratio, c.test_ratio) =
                (Some(ratios.0), Some(ratios.1), Some(ratios.2));
            c.seed = Some(seed);
            c.force = force;
            c
        }
        Cmd::Augment {
            common,
            out,
            strategy,
            count,
            seed,
            alpha,
        } => {
            let mut c = base(Command::Augment, common);
            c.out = Some(out);
            c.strategy = Some(strategy);
            c.count = Some(count);
            c.seed = Some(seed);
            (c.alpha_low, c.alpha_high) = (Some(alpha.0), Some(alpha.1));
            c
        }
        Cmd::Evaluate {
            common,
            predictions,
            split,
            out,
        } => {
            let mut c = base(Command::Evaluate, common);
            c.predictions = Some(predictions);
            c.split = split;
            c.out = out;
            c
        }
        Cmd::Report { common, out } => {
            let mut c = base(Command::Report, common);
            c.out = out;
            c
        }
        Cmd::Replay { .. } => unreachable!("handled before config"),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let mut stdout = std::io::stdout().lock();
    let result = match cli.command {
        Cmd::Replay { run_json } => replay(&run_json, cli.workers, &mut stdout),
        cmd => {
            let mut cfg = config(cmd);
            cfg.workers = cli.workers;
            run(cfg, &mut stdout)
        }
    };
    let _ = stdout.flush();
    match result {
        Ok(code) => ExitCode::from(code as u8),
        Err(e) => {
            eprintln!("{}", e.line());
            ExitCode::from(e.code.clamp(1, exit::DATA) as u8)
        }
    }
}
