//! Deterministic synthetic mammogram-like images and datasets, for fixtures,
//! benchmarks and demos.

use std::path::Path;

use rand::Rng;

use crate::error::{Error, Result};
use crate::model::{
    serialize_manifest, AnnotatedSample, BitDepth, BoundingBox, Image, Label, LabelScheme, Manifest,
};
use crate::preprocess::Laterality;
use crate::rng::derive_rng;

/// A bright half-ellipse against the chest-wall side of a dark frame, with
/// low-amplitude noise and brighter lesion rectangles.
pub fn mammogram(
    width: u32,
    height: u32,
    bit_depth: BitDepth,
    side: Laterality,
    lesions: &[BoundingBox],
    seed: u64,
) -> Result<Image> {
    let max = bit_depth.max_value() as f64;
    let mut rng = derive_rng("roiaug/synthetic", seed, "mammogram", 0);
    let (cy, ry) = (height as f64 / 2.0, height as f64 * 0.45);
    let rx = width as f64 * 0.7;
    Image::from_fn(width, height, bit_depth, |x, y| {
        let dx = match side {
            Laterality::Left => x as f64,
            Laterality::Right => (width - 1 - x) as f64,
        };
        let d = (dx / rx).powi(2) + ((y as f64 - cy) / ry).powi(2);
        let noise: f64 = rng.gen_range(-0.02..0.02);
        let level = if lesions.iter().any(|b| b.contains(x, y)) {
            0.85
        } else if d <= 1.0 {
            0.35 + 0.25 * (1.0 - d)
        } else {
            0.01
        };
        ((level + noise).clamp(0.0, 1.0) * max).round() as u16
    })
}

/// Write `count` synthetic samples to `dir/images/` plus `dir/manifest.csv`.
///
/// Labels cycle through BI-RADS 1..5. High-risk samples get one or two
/// lesions inside the breast; right and left breasts alternate. All samples
/// start unassigned.
pub fn write_dataset(
    dir: impl AsRef<Path>,
    count: usize,
    width: u32,
    height: u32,
    bit_depth: BitDepth,
    seed: u64,
) -> Result<Manifest> {
    let dir = dir.as_ref();
    let images = dir.join("images");
    std::fs::create_dir_all(&images).map_err(|e| Error::io(&images, e))?;
    let scheme = LabelScheme::default();
    let mut samples = Vec::with_capacity(count);
    for i in 0..count {
        let id = format!("syn{i:04}");
        let label = Label::Birads((i % 5) as u8 + 1);
        let side = if i % 2 == 0 {
            Laterality::Left
        } else {
            Laterality::Right
        };
        let mut rng = derive_rng("roiaug/synthetic", seed, &id, 1);
        let mut sample = AnnotatedSample::new(&id, format!("images/{id}.png"), label);
        if scheme.is_high_risk(label) {
            for k in 0..rng.gen_range(1..=2u32) {
                let bw = (width / 10).max(1);
                let bh = (height / 10).max(1);
                let x0 = rng.gen_range(width / 20..=width / 3);
                let y0 = rng.gen_range(height / 4..=height / 2);
                let x0 = match side {
                    Laterality::Left => x0,
                    Laterality::Right => width - 1 - x0 - (bw - 1),
                };
                let kind =
                    ["discrete_mass", "spiculated_mass", "stellate_mass"][(i + k as usize) % 3];
                sample =
                    sample.with_lesion(BoundingBox::new(x0, y0, x0 + bw - 1, y0 + bh - 1), kind);
            }
        }
        mammogram(
            width,
            height,
            bit_depth,
            side,
            &sample.boxes(),
            seed ^ i as u64,
        )?
        .save_png(dir.join(&sample.image_path))?;
        samples.push(sample);
    }
    let m = Manifest::new(scheme, samples);
    serialize_manifest(&m, dir.join("manifest.csv"))?;
    Ok(m)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::validate_manifest;
    use crate::preprocess::{detect_foreground, laterality};

    #[test]
    fn synthetic_images_have_expected_structure() {
        let img = mammogram(120, 90, BitDepth::Sixteen, Laterality::Right, &[], 3).unwrap();
        assert_eq!(laterality(&img), Laterality::Right);
        let fg = detect_foreground(&img, 0.05).unwrap();
        assert_eq!(fg.x_max, 119);
        assert!(fg.x_min > 0);
    }

    #[test]
    fn dataset_is_valid_and_reproducible() {
        let a = tempfile::tempdir().unwrap();
        let b = tempfile::tempdir().unwrap();
        let m = write_dataset(a.path(), 12, 80, 60, BitDepth::Eight, 9).unwrap();
        assert_eq!(
            m,
            write_dataset(b.path(), 12, 80, 60, BitDepth::Eight, 9).unwrap()
        );
        assert!(validate_manifest(&m, a.path()).is_empty());
        assert_eq!(
            m.samples.iter().filter(|s| !s.lesions.is_empty()).count(),
            6
        );
        for s in &m.samples {
            assert_eq!(
                std::fs::read(a.path().join(&s.image_path)).unwrap(),
                std::fs::read(b.path().join(&s.image_path)).unwrap()
            );
        }
    }
}
