use std::collections::HashMap;
use std::io::Write;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use roiaug_core::metrics::parse_predictions;
use roiaug_core::preprocess::parse_crop_sidecar;
use roiaug_core::{
    build_plan, confusion, execute_plan, parse_manifest, preprocess_image, relative_path,
    serialize_manifest, split_report, stratified_split, validate_manifest, AnnotatedSample,
    BoundingBox, Image, Manifest, MetricsReport, PreprocessOptions,
};

use crate::config::{Command, RunConfig};
use crate::error::{exit, CliError};

pub const AUGMENTED_MANIFEST: &str = "manifest.augmented.csv";
pub const MANIFEST: &str = "manifest.csv";
pub const PLAN: &str = "plan.json";
pub const RUN: &str = "run.json";

/// Execute one command. Human-readable output goes to `stdout`; the return
/// value is the process exit status.
pub fn run(config: RunConfig, stdout: &mut dyn Write) -> Result<i32, CliError> {
    let cfg = config.resolve()?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.workers)
        .build()
        .map_err(|e| CliError::usage(e.to_string()))?;
    let mut text = String::new();
    let status = pool.install(|| match cfg.command {
        Command::Validate => validate(&cfg, &mut text),
        Command::Preprocess => preprocess(&cfg, &mut text),
        Command::Split => split(&cfg, &mut text),
        Command::Augment => augment(&cfg, &mut text),
        Command::Evaluate => evaluate(&cfg, &mut text),
        Command::Report => report(&cfg, &mut text),
    });
    stdout.write_all(text.as_bytes())?;
    let status = status?;
    if let Some(out) = &cfg.out {
        create_dir(out)?;
        write_file(&out.join(RUN), cfg.to_run_json(out).as_bytes())?;
    }
    Ok(status)
}

/// Re-run the configuration stored in a `run.json`.
pub fn replay(run_json: &Path, workers: usize, stdout: &mut dyn Write) -> Result<i32, CliError> {
    let text = std::fs::read_to_string(run_json)
        .map_err(|e| CliError::io(format!("{}: {e}", run_json.display())))?;
    let dir = run_json.parent().unwrap_or(Path::new("."));
    let mut cfg = RunConfig::from_run_json(&text, dir)?;
    cfg.workers = workers;
    run(cfg, stdout)
}

fn create_dir(dir: &Path) -> Result<(), CliError> {
    std::fs::create_dir_all(dir).map_err(|e| CliError::io(format!("{}: {e}", dir.display())))
}

fn write_file(path: &Path, bytes: &[u8]) -> Result<(), CliError> {
    std::fs::write(path, bytes).map_err(|e| CliError::io(format!("{}: {e}", path.display())))
}

fn out_dir(cfg: &RunConfig) -> &Path {
    cfg.out.as_deref().expect("resolved config has --out")
}

fn load_manifest(cfg: &RunConfig) -> Result<Manifest, CliError> {
    parse_manifest(&cfg.manifest).map_err(|e| CliError::from(e).context(cfg.manifest.display()))
}

/// Re-express image paths (relative to `from`) relative to `to`, so the
/// written manifest resolves against its own directory.
fn rebase(m: &mut Manifest, from: &Path, to: &Path) {
    for s in &mut m.samples {
        s.image_path = relative_path(&from.join(&s.image_path), to);
    }
}

fn say(log: &mut String, text: &str) -> Result<(), CliError> {
    log.push_str(text);
    Ok(())
}

fn validate(cfg: &RunConfig, log: &mut String) -> Result<i32, CliError> {
    let m = load_manifest(cfg)?;
    let violations = validate_manifest(&m, cfg.image_root());
    let mut text = String::new();
    for v in &violations {
        text.push_str(&format!("{v}\n"));
    }
    text.push_str(&format!(
        "{} samples, {} violations\n",
        m.len(),
        violations.len()
    ));
    say(log, &text)?;
    Ok(if violations.is_empty() {
        exit::OK
    } else {
        exit::VALIDATION_FAILED
    })
}

fn preprocess(cfg: &RunConfig, log: &mut String) -> Result<i32, CliError> {
    let m = load_manifest(cfg)?;
    let out = out_dir(cfg);
    let images = out.join("images");
    create_dir(&images)?;
    let crops: HashMap<String, BoundingBox> = match &cfg.crop_boxes {
        Some(p) => parse_crop_sidecar(p).map_err(|e| CliError::from(e).context(p.display()))?,
        None => HashMap::new(),
    };
    let opts = PreprocessOptions {
        threshold_fraction: cfg.threshold.expect("resolved"),
        target_w: cfg.target_width.expect("resolved"),
        target_h: cfg.target_height.expect("resolved"),
    };
    let root = cfg.image_root();

    let results: Vec<Result<AnnotatedSample, CliError>> = m
        .samples
        .par_iter()
        .map(|s| {
            let ctx = |e: roiaug_core::Error| {
                CliError::from(e).context(format!("sample {}", s.sample_id))
            };
            if s.sample_id.contains(['/', '\\']) {
                return Err(CliError {
                    code: exit::DATA,
                    message: format!("sample id {:?} cannot name an output file", s.sample_id),
                });
            }
            let img = Image::load_png(root.join(&s.image_path)).map_err(ctx)?;
            let p = preprocess_image(&img, &s.boxes(), &opts, crops.get(&s.sample_id).copied())
                .map_err(ctx)?;
            let rel = format!("images/{}.png", s.sample_id);
            p.image.save_png(out.join(&rel)).map_err(ctx)?;
            let mut sample = s.clone();
            sample.image_path = rel;
            for (lesion, bbox) in sample.lesions.iter_mut().zip(p.lesions) {
                lesion.bbox = bbox;
            }
            Ok(sample)
        })
        .collect();
    let samples = results.into_iter().collect::<Result<Vec<_>, _>>()?;
    let written = Manifest::new(m.scheme.clone(), samples);
    serialize_manifest(&written, out.join(MANIFEST))?;
    say(
        log,
        &format!(
            "preprocessed {} samples to {}x{} -> {}\n",
            written.len(),
            opts.target_w,
            opts.target_h,
            out.join(MANIFEST).display()
        ),
    )?;
    Ok(exit::OK)
}

fn split(cfg: &RunConfig, log: &mut String) -> Result<i32, CliError> {
    let m = load_manifest(cfg)?;
    let out = out_dir(cfg);
    create_dir(out)?;
    let mut assigned = stratified_split(&m, &cfg.split_spec()?, cfg.force)?;
    rebase(&mut assigned, cfg.image_root(), out);
    serialize_manifest(&assigned, out.join(MANIFEST))?;
    let report = split_report(&assigned);
    write_file(&out.join("split_report.csv"), report.to_csv().as_bytes())?;
    say(log, &report.to_text())?;
    Ok(exit::OK)
}

fn augment(cfg: &RunConfig, log: &mut String) -> Result<i32, CliError> {
    let m = load_manifest(cfg)?;
    let out = out_dir(cfg);
    create_dir(out)?;
    let plan = build_plan(
        &m,
        cfg.strategy.expect("resolved"),
        cfg.count.expect("resolved"),
        cfg.seed.expect("resolved"),
        cfg.alpha_range()?,
    )?;
    let mut plan_json = serde_json::to_string_pretty(&plan).expect("plan serializes");
    plan_json.push('\n');
    write_file(&out.join(PLAN), plan_json.as_bytes())?;

    let mut augmented = execute_plan(&plan, &m, cfg.image_root(), out)?;
    rebase(&mut augmented, cfg.image_root(), out);
    serialize_manifest(&augmented, out.join(AUGMENTED_MANIFEST))?;
    say(
        log,
        &format!(
            "{} {} records; manifest now has {} samples -> {}\n",
            plan.records.len(),
            plan.strategy,
            augmented.len(),
            out.join(AUGMENTED_MANIFEST).display()
        ),
    )?;
    Ok(exit::OK)
}

fn evaluate(cfg: &RunConfig, log: &mut String) -> Result<i32, CliError> {
    let m = load_manifest(cfg)?;
    let truth = match cfg.split {
        Some(s) => m.filter_split(s),
        None => m,
    };
    let pred_path: &PathBuf = cfg.predictions.as_ref().expect("resolved");
    let preds = parse_predictions(pred_path, &truth.scheme)
        .map_err(|e| CliError::from(e).context(pred_path.display()))?;
    let cm = confusion(&truth, &preds)?;
    let report = MetricsReport::new(&cm);

    let mut text = report.to_text();
    text.push_str("\nconfusion (rows = truth, columns = predicted)\n");
    for (label, row) in cm.classes().iter().zip(cm.counts()) {
        text.push_str(&format!("{:<12}", label.to_string()));
        for c in row {
            text.push_str(&format!("{c:>8}"));
        }
        text.push('\n');
    }
    say(log, &text)?;
    if let Some(out) = &cfg.out {
        create_dir(out)?;
        write_file(&out.join("metrics.csv"), report.to_csv().as_bytes())?;
    }
    Ok(exit::OK)
}

fn report(cfg: &RunConfig, log: &mut String) -> Result<i32, CliError> {
    let m = load_manifest(cfg)?;
    let report = split_report(&m);
    say(log, &report.to_text())?;
    if let Some(out) = &cfg.out {
        create_dir(out)?;
        write_file(&out.join("split_report.csv"), report.to_csv().as_bytes())?;
    }
    Ok(exit::OK)
}
