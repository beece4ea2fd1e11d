//! Lesion-aware augmentation: transparency (background attenuation) and
//! CutMix (lesion transplant onto a low-risk background), plus seeded
//! batch planning and execution.

use std::collections::HashSet;
use std::fmt;
use std::path::Path;
use std::str::FromStr;

use rand::{Rng, RngCore};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::masking::{apply_mask, blend, build_mask};
use crate::model::{AnnotatedSample, Image, Label, LabelScheme, Manifest, Split};
use crate::paths::relative_path;
use crate::rng::derive_rng;

/// Closed interval alphas are drawn from.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct AlphaRange {
    low: f64,
    high: f64,
}

impl AlphaRange {
    pub fn new(low: f64, high: f64) -> Result<Self> {
        if 0.0 <= low && low <= high && high <= 1.0 {
            Ok(Self { low, high })
        } else {
            Err(Error::InvalidAlphaRange { low, high })
        }
    }

    pub fn low(&self) -> f64 {
        self.low
    }

    pub fn high(&self) -> f64 {
        self.high
    }

    pub fn contains(&self, alpha: f64) -> bool {
        self.low <= alpha && alpha <= self.high
    }
}

impl Default for AlphaRange {
    fn default() -> Self {
        Self {
            low: 0.1,
            high: 0.9,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Strategy {
    Transparency,
    CutMix,
}

impl Strategy {
    pub fn as_str(self) -> &'static str {
        match self {
            Strategy::Transparency => "transparency",
            Strategy::CutMix => "cutmix",
        }
    }
}

impl fmt::Display for Strategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Strategy {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s {
            "transparency" => Ok(Strategy::Transparency),
            "cutmix" => Ok(Strategy::CutMix),
            _ => Err(format!("unknown strategy {s:?} (transparency|cutmix)")),
        }
    }
}

/// Uniform draw on `[low, high]` from 53 random bits.
pub fn sample_alpha(rng: &mut impl RngCore, range: AlphaRange) -> f64 {
    let unit = (rng.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64);
    (range.low + (range.high - range.low) * unit).clamp(range.low, range.high)
}

/// Keep the lesion-box union, scale every other pixel by `alpha`. The label
/// is unchanged.
pub fn transparency(sample: &AnnotatedSample, image: &Image, alpha: f64) -> Result<(Image, Label)> {
    if sample.lesions.is_empty() {
        return Err(Error::NoLesionBoxes(sample.sample_id.clone()));
    }
    if !(0.0..=1.0).contains(&alpha) {
        return Err(Error::OutOfUnitRange {
            what: "alpha",
            value: alpha,
        });
    }
    let mask = build_mask(image.width(), image.height(), &sample.boxes(), alpha)?;
    Ok((apply_mask(image, &mask)?, sample.label))
}

/// Paste the source's lesion boxes onto the background. The output takes the
/// source's label.
pub fn cutmix(
    source: (&AnnotatedSample, &Image),
    background: (&AnnotatedSample, &Image),
    scheme: &LabelScheme,
) -> Result<(Image, Label)> {
    let (src, src_img) = source;
    let (bg, bg_img) = background;
    if src.lesions.is_empty() {
        return Err(Error::NoLesionBoxes(src.sample_id.clone()));
    }
    if !scheme.is_high_risk(src.label) {
        return Err(Error::LabelNotEligible {
            side: "source",
            sample_id: src.sample_id.clone(),
            label: src.label,
        });
    }
    if !scheme.is_low_risk(bg.label) {
        return Err(Error::LabelNotEligible {
            side: "background",
            sample_id: bg.sample_id.clone(),
            label: bg.label,
        });
    }
    src_img.same_dimensions(bg_img.width(), bg_img.height())?;
    let mask = build_mask(src_img.width(), src_img.height(), &src.boxes(), 0.0)?;
    Ok((blend(src_img, bg_img, &mask)?, src.label))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PlanRecord {
    pub source_id: String,
    pub replica_index: u32,
    pub background_id: Option<String>,
    pub alpha: Option<f64>,
    pub output_id: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AugmentPlan {
    pub seed: u64,
    pub per_sample_count: u32,
    pub strategy: Strategy,
    pub alpha_range: AlphaRange,
    pub records: Vec<PlanRecord>,
}

pub fn output_id(source_id: &str, strategy: Strategy, replica_index: u32) -> String {
    format!("{source_id}__{strategy}__{replica_index}")
}

/// Train-split samples that can serve as augmentation sources.
pub fn eligible_sources(m: &Manifest) -> impl Iterator<Item = &AnnotatedSample> {
    m.samples.iter().filter(|s| {
        s.split == Split::Train && !s.lesions.is_empty() && m.scheme.is_high_risk(s.label)
    })
}

/// Train-split low-risk samples, sorted by id so the draw does not depend on
/// manifest row order.
pub fn eligible_backgrounds(m: &Manifest) -> Vec<&AnnotatedSample> {
    let mut v: Vec<_> = m
        .samples
        .iter()
        .filter(|s| s.split == Split::Train && m.scheme.is_low_risk(s.label))
        .collect();
    v.sort_by(|a, b| a.sample_id.cmp(&b.sample_id));
    v
}

const PLAN_DOMAIN: &str = "roiaug/plan-record";

/// Deterministic augmentation plan: `per_sample_count` records per eligible
/// source, in manifest order. Each record's randomness comes from a generator
/// keyed on `(seed, source_id, replica_index)`.
pub fn build_plan(
    m: &Manifest,
    strategy: Strategy,
    per_sample_count: u32,
    seed: u64,
    alpha_range: AlphaRange,
) -> Result<AugmentPlan> {
    let mut plan = AugmentPlan {
        seed,
        per_sample_count,
        strategy,
        alpha_range,
        records: Vec::new(),
    };
    if per_sample_count == 0 {
        return Ok(plan);
    }
    let sources: Vec<_> = eligible_sources(m).collect();
    if sources.is_empty() {
        return Err(Error::NoEligibleSources);
    }
    let backgrounds = eligible_backgrounds(m);
    if strategy == Strategy::CutMix && backgrounds.is_empty() {
        return Err(Error::NoEligibleBackgrounds);
    }

    for src in sources {
        if src.sample_id.contains(['/', '\\']) {
            return Err(Error::InvalidField {
                field: "sample_id",
                reason: format!("{:?} cannot name an output file", src.sample_id),
            });
        }
        for replica in 0..per_sample_count {
            let mut rng = derive_rng(PLAN_DOMAIN, seed, &src.sample_id, replica as u64);
            let (background_id, alpha) = match strategy {
                Strategy::Transparency => (None, Some(sample_alpha(&mut rng, alpha_range))),
                Strategy::CutMix => {
                    let pick = rng.gen_range(0..backgrounds.len());
                    (Some(backgrounds[pick].sample_id.clone()), None)
                }
            };
            plan.records.push(PlanRecord {
                source_id: src.sample_id.clone(),
                replica_index: replica,
                background_id,
                alpha,
                output_id: output_id(&src.sample_id, strategy, replica),
            });
        }
    }
    Ok(plan)
}

fn render_record(
    plan: &AugmentPlan,
    record: &PlanRecord,
    m: &Manifest,
    source: &AnnotatedSample,
    source_img: &Image,
    image_root: &Path,
) -> Result<Image> {
    match plan.strategy {
        Strategy::Transparency => {
            let alpha = record.alpha.ok_or_else(|| Error::InvalidField {
                field: "alpha",
                reason: "transparency record without alpha".into(),
            })?;
            Ok(transparency(source, source_img, alpha)?.0)
        }
        Strategy::CutMix => {
            let bg_id = record
                .background_id
                .as_deref()
                .ok_or_else(|| Error::InvalidField {
                    field: "background_id",
                    reason: "cutmix record without background".into(),
                })?;
            let bg = m
                .get(bg_id)
                .ok_or_else(|| Error::PlanInconsistent(bg_id.to_string()))?;
            let bg_img = Image::load_png(image_root.join(&bg.image_path))?;
            Ok(cutmix((source, source_img), (bg, &bg_img), &m.scheme)?.0)
        }
    }
}

/// Render every plan record to `<out_root>/<output_id>.png` and return the
/// input manifest extended with the augmented samples (train split, source
/// label, source lesion boxes). Image paths of the new samples are relative to
/// `image_root`.
///
/// Records are rendered on the current rayon pool. Each output is a pure
/// function of its record and input files, so the pool size never changes
/// the bytes written.
pub fn execute_plan(
    plan: &AugmentPlan,
    m: &Manifest,
    image_root: impl AsRef<Path>,
    out_root: impl AsRef<Path>,
) -> Result<Manifest> {
    let image_root = image_root.as_ref();
    let out_root = out_root.as_ref();

    let mut augmented = Vec::with_capacity(plan.records.len());
    let mut ids: HashSet<&str> = m.samples.iter().map(|s| s.sample_id.as_str()).collect();
    for r in &plan.records {
        let source = m
            .get(&r.source_id)
            .ok_or_else(|| Error::PlanInconsistent(r.source_id.clone()))?;
        if !ids.insert(&r.output_id) {
            return Err(Error::DuplicateId(r.output_id.clone()));
        }
        let file = out_root.join(format!("{}.png", r.output_id));
        augmented.push(AnnotatedSample {
            sample_id: r.output_id.clone(),
            image_path: relative_path(&file, image_root),
            label: source.label,
            lesions: source.lesions.clone(),
            split: Split::Train,
        });
    }
    if !plan.records.is_empty() {
        std::fs::create_dir_all(out_root).map_err(|e| Error::io(out_root, e))?;
    }

    // Consecutive records sharing a source decode that source once.
    let mut groups: Vec<std::ops::Range<usize>> = Vec::new();
    for (i, r) in plan.records.iter().enumerate() {
        match groups.last_mut() {
            Some(g) if plan.records[g.start].source_id == r.source_id => g.end = i + 1,
            _ => groups.push(i..i + 1),
        }
    }

    let results: Vec<Result<()>> = groups
        .into_par_iter()
        .map(|group| {
            let first = group.start;
            let source = m
                .get(&plan.records[first].source_id)
                .expect("checked above");
            let source_img = Image::load_png(image_root.join(&source.image_path)).map_err(|e| {
                Error::Record {
                    index: first,
                    source: Box::new(e),
                }
            })?;
            for index in group {
                let record = &plan.records[index];
                render_record(plan, record, m, source, &source_img, image_root)
                    .and_then(|img| {
                        img.save_png(out_root.join(format!("{}.png", record.output_id)))
                    })
                    .map_err(|e| Error::Record {
                        index,
                        source: Box::new(e),
                    })?;
            }
            Ok(())
        })
        .collect();
    results.into_iter().collect::<Result<()>>()?;

    let mut out = m.clone();
    out.samples.extend(augmented);
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{BitDepth, BoundingBox};

    fn sample(id: &str, label: u8) -> AnnotatedSample {
        AnnotatedSample::new(id, format!("{id}.png"), Label::Birads(label)).with_split(Split::Train)
    }

    #[test]
    fn alpha_range_validation() {
        assert!(AlphaRange::new(0.2, 0.1).is_err());
        assert!(AlphaRange::new(-0.1, 0.5).is_err());
        assert!(AlphaRange::new(0.5, 1.1).is_err());
        assert!(AlphaRange::new(0.5, 0.5).is_ok());
        assert_eq!(AlphaRange::default(), AlphaRange::new(0.1, 0.9).unwrap());
    }

    #[test]
    fn degenerate_alpha_range() {
        let mut rng = derive_rng("t", 0, "", 0);
        let r = AlphaRange::new(0.5, 0.5).unwrap();
        assert!((0..100).all(|_| sample_alpha(&mut rng, r) == 0.5));
    }

    #[test]
    fn alpha_is_reproducible_from_seed() {
        let a = sample_alpha(
            &mut derive_rng(PLAN_DOMAIN, 42, "x", 0),
            AlphaRange::default(),
        );
        let b = sample_alpha(
            &mut derive_rng(PLAN_DOMAIN, 42, "x", 0),
            AlphaRange::default(),
        );
        assert_eq!(a.to_bits(), b.to_bits());
    }

    #[test]
    fn transparency_worked_example() {
        let img = Image::new(2, 2, BitDepth::Eight, vec![10, 20, 30, 40]).unwrap();
        let s = sample("s", 4).with_lesion(BoundingBox::new(0, 0, 0, 0), "mass");
        let (out, label) = transparency(&s, &img, 0.5).unwrap();
        assert_eq!(out.pixels(), &[10, 10, 15, 20]);
        assert_eq!(label, Label::Birads(4));
        let (same, _) = transparency(&s, &img, 1.0).unwrap();
        assert_eq!(same, img);
    }

    #[test]
    fn transparency_requires_a_lesion() {
        let img = Image::filled(2, 2, BitDepth::Eight, 1).unwrap();
        assert!(matches!(
            transparency(&sample("s", 4), &img, 0.5),
            Err(Error::NoLesionBoxes(_))
        ));
    }

    #[test]
    fn cutmix_worked_example_and_eligibility() {
        let scheme = LabelScheme::default();
        let a = Image::filled(2, 2, BitDepth::Eight, 100).unwrap();
        let b = Image::filled(2, 2, BitDepth::Eight, 50).unwrap();
        let src = sample("s", 5).with_lesion(BoundingBox::new(0, 0, 0, 0), "mass");
        let bg = sample("b", 1);
        let (out, label) = cutmix((&src, &a), (&bg, &b), &scheme).unwrap();
        assert_eq!(out.pixels(), &[100, 50, 50, 50]);
        assert_eq!(label, Label::Birads(5));

        let whole = sample("w", 3).with_lesion(BoundingBox::full(2, 2), "mass");
        assert_eq!(cutmix((&whole, &a), (&bg, &b), &scheme).unwrap().0, a);

        let low_src = sample("l", 2).with_lesion(BoundingBox::new(0, 0, 0, 0), "mass");
        assert!(matches!(
            cutmix((&low_src, &a), (&bg, &b), &scheme),
            Err(Error::LabelNotEligible { side: "source", .. })
        ));
        assert!(matches!(
            cutmix((&src, &a), (&src, &b), &scheme),
            Err(Error::LabelNotEligible {
                side: "background",
                ..
            })
        ));
        assert!(matches!(
            cutmix((&sample("n", 4), &a), (&bg, &b), &scheme),
            Err(Error::NoLesionBoxes(_))
        ));
        let small = Image::filled(1, 2, BitDepth::Eight, 50).unwrap();
        assert!(matches!(
            cutmix((&src, &a), (&bg, &small), &scheme),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    fn plan_manifest() -> Manifest {
        let lesion = BoundingBox::new(0, 0, 1, 1);
        Manifest::new(
            LabelScheme::default(),
            vec![
                sample("a", 3).with_lesion(lesion, "mass"),
                sample("b", 4).with_lesion(lesion, "mass"),
                sample("c", 5).with_lesion(lesion, "mass"),
                sample("d", 5),
                sample("e", 4)
                    .with_lesion(lesion, "mass")
                    .with_split(Split::Test),
                sample("f", 1),
                sample("g", 2),
                sample("h", 1).with_split(Split::Val),
            ],
        )
    }

    #[test]
    fn plan_counts_and_alpha_bounds() {
        let m = plan_manifest();
        let plan = build_plan(&m, Strategy::Transparency, 2, 7, AlphaRange::default()).unwrap();
        assert_eq!(plan.records.len(), 6);
        assert!(
            plan.records
                .iter()
                .all(|r| r.background_id.is_none()
                    && AlphaRange::default().contains(r.alpha.unwrap()))
        );
        let ids: HashSet<_> = plan.records.iter().map(|r| &r.output_id).collect();
        assert_eq!(ids.len(), 6);
        assert_eq!(plan.records[1].output_id, "a__transparency__1");

        assert!(
            build_plan(&m, Strategy::Transparency, 0, 7, AlphaRange::default())
                .unwrap()
                .records
                .is_empty()
        );
    }

    #[test]
    fn cutmix_plan_uses_train_low_risk_backgrounds() {
        let m = plan_manifest();
        let plan = build_plan(&m, Strategy::CutMix, 20, 3, AlphaRange::default()).unwrap();
        assert_eq!(plan.records.len(), 60);
        let bgs: HashSet<_> = plan
            .records
            .iter()
            .map(|r| r.background_id.clone().unwrap())
            .collect();
        assert!(plan.records.iter().all(|r| r.alpha.is_none()));
        assert_eq!(bgs, HashSet::from(["f".to_string(), "g".to_string()]));
    }

    #[test]
    fn plan_is_independent_of_row_order() {
        let m = plan_manifest();
        let mut shuffled = m.clone();
        shuffled.samples.reverse();
        let key = |p: AugmentPlan| {
            let mut r = p.records;
            r.sort_by(|a, b| a.output_id.cmp(&b.output_id));
            r
        };
        for strategy in [Strategy::Transparency, Strategy::CutMix] {
            let a = build_plan(&m, strategy, 3, 11, AlphaRange::default()).unwrap();
            let b = build_plan(&shuffled, strategy, 3, 11, AlphaRange::default()).unwrap();
            assert_eq!(key(a), key(b));
        }
    }

    #[test]
    fn plan_errors() {
        let mut m = plan_manifest();
        m.samples.retain(|s| s.lesions.is_empty());
        assert!(matches!(
            build_plan(&m, Strategy::Transparency, 1, 0, AlphaRange::default()),
            Err(Error::NoEligibleSources)
        ));
        let mut m = plan_manifest();
        m.samples.retain(|s| !m.scheme.is_low_risk(s.label));
        assert!(build_plan(&m, Strategy::Transparency, 1, 0, AlphaRange::default()).is_ok());
        assert!(matches!(
            build_plan(&m, Strategy::CutMix, 1, 0, AlphaRange::default()),
            Err(Error::NoEligibleBackgrounds)
        ));
    }
}
