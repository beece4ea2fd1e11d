//! Breast-region cropping, laterality normalisation and fixed-size resize.
//! Every geometric step carries the lesion boxes along with the pixels.

use std::collections::{HashMap, VecDeque};
use std::fs::File;
use std::path::Path;

use crate::error::{Error, Result};
use crate::model::{BoundingBox, Image};

pub const DEFAULT_THRESHOLD_FRACTION: f64 = 0.05;
pub const DEFAULT_TARGET_SIZE: (u32, u32) = (1024, 768);

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CropResult {
    pub cropped: Image,
    /// Crop region in source coordinates.
    pub crop_box: BoundingBox,
    /// Lesions in cropped coordinates.
    pub transformed_lesions: Vec<BoundingBox>,
}

/// Tight box around the largest 8-connected component of pixels brighter than
/// `threshold_fraction` of full scale. Equal-area components resolve to the
/// one met first in raster order.
pub fn detect_foreground(x: &Image, threshold_fraction: f64) -> Result<BoundingBox> {
    if !(threshold_fraction > 0.0 && threshold_fraction < 1.0) {
        return Err(Error::OutOfUnitRange {
            what: "threshold fraction",
            value: threshold_fraction,
        });
    }
    let (w, h) = (x.width() as usize, x.height() as usize);
    let cutoff = threshold_fraction * x.max_value() as f64;
    let fg: Vec<bool> = x.pixels().iter().map(|&p| p as f64 > cutoff).collect();
    let mut seen = vec![false; w * h];
    let mut queue = VecDeque::new();
    let mut best: Option<(usize, BoundingBox)> = None;

    for start in 0..w * h {
        if !fg[start] || seen[start] {
            continue;
        }
        seen[start] = true;
        queue.push_back(start);
        let mut area = 0usize;
        let (sx, sy) = ((start % w) as u32, (start / w) as u32);
        let mut bbox = BoundingBox::new(sx, sy, sx, sy);
        while let Some(idx) = queue.pop_front() {
            area += 1;
            let (cx, cy) = (idx % w, idx / w);
            bbox = bbox.union(&BoundingBox::new(
                cx as u32, cy as u32, cx as u32, cy as u32,
            ));
            for ny in cy.saturating_sub(1)..=(cy + 1).min(h - 1) {
                for nx in cx.saturating_sub(1)..=(cx + 1).min(w - 1) {
                    let n = ny * w + nx;
                    if fg[n] && !seen[n] {
                        seen[n] = true;
                        queue.push_back(n);
                    }
                }
            }
        }
        if best.map_or(true, |(a, _)| area > a) {
            best = Some((area, bbox));
        }
    }
    best.map(|(_, b)| b).ok_or(Error::NoForeground)
}

/// Cut `region` out of the image and move lesions into its frame, clipping
/// any part that falls outside. A lesion with no overlap is an error, since
/// the crop would discard annotated pathology.
pub fn crop(x: &Image, region: BoundingBox, lesions: &[BoundingBox]) -> Result<CropResult> {
    region.check_within(x.width(), x.height())?;
    let mut transformed = Vec::with_capacity(lesions.len());
    for (i, l) in lesions.iter().enumerate() {
        l.check_within(x.width(), x.height())?;
        let clipped = l.intersection(&region).ok_or(Error::LesionOutsideCrop(i))?;
        transformed.push(BoundingBox::new(
            clipped.x_min - region.x_min,
            clipped.y_min - region.y_min,
            clipped.x_max - region.x_min,
            clipped.y_max - region.y_min,
        ));
    }
    let mut pixels = Vec::with_capacity(region.area() as usize);
    for y in region.y_min..=region.y_max {
        pixels.extend_from_slice(&x.row(y)[region.x_min as usize..=region.x_max as usize]);
    }
    Ok(CropResult {
        cropped: Image::from_parts(region.width(), region.height(), x.bit_depth(), pixels),
        crop_box: region,
        transformed_lesions: transformed,
    })
}

/// Mirror about the vertical axis: `out(i, j) = x(W-1-i, j)`.
pub fn flip_horizontal(x: &Image, lesions: &[BoundingBox]) -> (Image, Vec<BoundingBox>) {
    let w = x.width();
    let mut pixels = Vec::with_capacity(x.pixels().len());
    for y in 0..x.height() {
        pixels.extend(x.row(y).iter().rev());
    }
    let boxes = lesions
        .iter()
        .map(|b| BoundingBox::new(w - 1 - b.x_max, b.y_min, w - 1 - b.x_min, b.y_max))
        .collect();
    (
        Image::from_parts(w, x.height(), x.bit_depth(), pixels),
        boxes,
    )
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Laterality {
    Left,
    Right,
}

/// `Right` when the right half is brighter on average; ties go to `Left`.
/// For odd widths the centre column belongs to neither half.
pub fn laterality(x: &Image) -> Laterality {
    let half = x.width() as usize / 2;
    let (mut left, mut right) = (0u64, 0u64);
    for y in 0..x.height() {
        let row = x.row(y);
        left += row[..half].iter().map(|&p| p as u64).sum::<u64>();
        right += row[row.len() - half..]
            .iter()
            .map(|&p| p as u64)
            .sum::<u64>();
    }
    // both halves hold the same pixel count, so sums compare like means
    if right > left {
        Laterality::Right
    } else {
        Laterality::Left
    }
}

fn scale_coord(c: u32, scale: f64, limit: u32) -> u32 {
    ((c as f64 * scale).round_ties_even() as u32).min(limit - 1)
}

/// Bilinear resample with pixel-centre alignment. Box corners are scaled by
/// the size ratio, rounded to nearest and clamped into the new frame.
pub fn resize(
    x: &Image,
    lesions: &[BoundingBox],
    target_w: u32,
    target_h: u32,
) -> Result<(Image, Vec<BoundingBox>)> {
    if target_w == 0 || target_h == 0 {
        return Err(Error::InvalidTargetSize(target_w, target_h));
    }
    let (sw, sh) = (x.width(), x.height());
    let sx = target_w as f64 / sw as f64;
    let sy = target_h as f64 / sh as f64;
    let boxes = lesions
        .iter()
        .map(|b| {
            BoundingBox::new(
                scale_coord(b.x_min, sx, target_w),
                scale_coord(b.y_min, sy, target_h),
                scale_coord(b.x_max, sx, target_w),
                scale_coord(b.y_max, sy, target_h),
            )
        })
        .collect();
    if (sw, sh) == (target_w, target_h) {
        return Ok((x.clone(), boxes));
    }

    // (lower index, upper index, weight of upper)
    let taps = |src: u32, dst: u32| -> Vec<(usize, usize, f64)> {
        let ratio = src as f64 / dst as f64;
        (0..dst)
            .map(|o| {
                let pos = ((o as f64 + 0.5) * ratio - 0.5).clamp(0.0, (src - 1) as f64);
                let lo = pos.floor() as usize;
                let hi = (lo + 1).min(src as usize - 1);
                (lo, hi, pos - lo as f64)
            })
            .collect()
    };
    let xtaps = taps(sw, target_w);
    let ytaps = taps(sh, target_h);
    let max = x.max_value() as f64;
    let mut pixels = Vec::with_capacity(target_w as usize * target_h as usize);
    for &(y0, y1, fy) in &ytaps {
        let r0 = x.row(y0 as u32);
        let r1 = x.row(y1 as u32);
        for &(x0, x1, fx) in &xtaps {
            let top = r0[x0] as f64 * (1.0 - fx) + r0[x1] as f64 * fx;
            let bottom = r1[x0] as f64 * (1.0 - fx) + r1[x1] as f64 * fx;
            let v = top * (1.0 - fy) + bottom * fy;
            pixels.push(v.round_ties_even().clamp(0.0, max) as u16);
        }
    }
    Ok((
        Image::from_parts(target_w, target_h, x.bit_depth(), pixels),
        boxes,
    ))
}

/// Read a crop-box sidecar: `sample_id,x_min,y_min,x_max,y_max`.
pub fn parse_crop_sidecar(path: impl AsRef<Path>) -> Result<HashMap<String, BoundingBox>> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut rdr = csv::ReaderBuilder::new().flexible(true).from_reader(file);
    let header = rdr.headers().map_err(|e| Error::MalformedRow {
        line: 1,
        reason: e.to_string(),
    })?;
    if header
        .iter()
        .ne(["sample_id", "x_min", "y_min", "x_max", "y_max"])
    {
        return Err(Error::MalformedRow {
            line: 1,
            reason: "expected header sample_id,x_min,y_min,x_max,y_max".into(),
        });
    }
    let mut out = HashMap::new();
    for rec in rdr.records() {
        let rec = rec.map_err(|e| Error::MalformedRow {
            line: e.position().map_or(0, |p| p.line()),
            reason: e.to_string(),
        })?;
        let line = rec.position().map_or(0, |p| p.line());
        let malformed = |reason: String| Error::MalformedRow { line, reason };
        if rec.len() != 5 {
            return Err(malformed(format!(
                "expected 5 columns, found {}",
                rec.len()
            )));
        }
        let c: Vec<u32> = (1..5)
            .map(|i| rec[i].trim().parse::<u32>())
            .collect::<std::result::Result<_, _>>()
            .map_err(|e| malformed(e.to_string()))?;
        let id = rec[0].trim().to_string();
        if out
            .insert(id.clone(), BoundingBox::new(c[0], c[1], c[2], c[3]))
            .is_some()
        {
            return Err(Error::DuplicateId(id));
        }
    }
    Ok(out)
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PreprocessOptions {
    pub threshold_fraction: f64,
    pub target_w: u32,
    pub target_h: u32,
}

impl Default for PreprocessOptions {
    fn default() -> Self {
        Self {
            threshold_fraction: DEFAULT_THRESHOLD_FRACTION,
            target_w: DEFAULT_TARGET_SIZE.0,
            target_h: DEFAULT_TARGET_SIZE.1,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Preprocessed {
    pub image: Image,
    pub lesions: Vec<BoundingBox>,
    pub crop_box: BoundingBox,
    pub laterality: Laterality,
}

/// Full per-image pipeline: crop, flip right breasts, resize.
///
/// The crop region is `crop_override` if given, otherwise the detected
/// foreground. Either way it is widened to cover every lesion so that no
/// annotation is clipped. Laterality is judged on the uncropped image.
pub fn preprocess_image(
    x: &Image,
    lesions: &[BoundingBox],
    opts: &PreprocessOptions,
    crop_override: Option<BoundingBox>,
) -> Result<Preprocessed> {
    let mut region = match crop_override {
        Some(b) => b,
        None => detect_foreground(x, opts.threshold_fraction)?,
    };
    for l in lesions {
        l.check_within(x.width(), x.height())?;
        region = region.union(l);
    }
    let side = laterality(x);
    let cropped = crop(x, region, lesions)?;
    let (img, boxes) = match side {
        Laterality::Right => flip_horizontal(&cropped.cropped, &cropped.transformed_lesions),
        Laterality::Left => (cropped.cropped, cropped.transformed_lesions),
    };
    let (image, lesions) = resize(&img, &boxes, opts.target_w, opts.target_h)?;
    Ok(Preprocessed {
        image,
        lesions,
        crop_box: region,
        laterality: side,
    })
}
