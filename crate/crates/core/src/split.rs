//! Label-stratified train/val/test assignment.
//!
//! Within each class the sample ids are sorted, shuffled with a generator
//! keyed on `(seed, class)`, then cut into contiguous runs whose sizes are the
//! largest-remainder apportionment of the class size over the three ratios.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use rand::seq::SliceRandom;

use crate::error::{Error, Result};
use crate::model::{Label, Manifest, Split};
use crate::rng::derive_rng;

const SPLITS: [Split; 3] = [Split::Train, Split::Val, Split::Test];

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SplitSpec {
    ratios: [f64; 3],
    pub seed: u64,
}

impl SplitSpec {
    pub fn new(train: f64, val: f64, test: f64, seed: u64) -> Result<Self> {
        let ratios = [train, val, test];
        if ratios.iter().any(|r| !r.is_finite() || *r < 0.0) {
            return Err(Error::InvalidRatios(format!(
                "{ratios:?} must be non-negative"
            )));
        }
        let sum: f64 = ratios.iter().sum();
        if (sum - 1.0).abs() > 1e-9 {
            return Err(Error::InvalidRatios(format!(
                "{ratios:?} sum to {sum}, not 1"
            )));
        }
        Ok(Self { ratios, seed })
    }

    /// `(train, val, test)`.
    pub fn ratios(&self) -> [f64; 3] {
        self.ratios
    }
}

/// Largest-remainder apportionment of `n` items over `ratios`. Ties in the
/// fractional part go to the earlier split.
pub fn apportion(n: usize, ratios: [f64; 3]) -> [usize; 3] {
    let exact = ratios.map(|r| n as f64 * r);
    // the epsilon absorbs representation error such as 10 * 0.3 = 2.9999999999999996
    let mut counts = exact.map(|e| ((e + 1e-9).floor() as usize).min(n));
    let assigned: usize = counts.iter().sum();
    let mut order = [0usize, 1, 2];
    order.sort_by(|&a, &b| {
        let fa = exact[a] - counts[a] as f64;
        let fb = exact[b] - counts[b] as f64;
        fb.total_cmp(&fa).then(a.cmp(&b))
    });
    for &i in order.iter().take(n.saturating_sub(assigned)) {
        counts[i] += 1;
    }
    counts
}

/// Assign every sample to train/val/test, stratified by label.
///
/// Samples that already carry a split are refused unless `force` is set.
pub fn stratified_split(m: &Manifest, spec: &SplitSpec, force: bool) -> Result<Manifest> {
    if m.is_empty() {
        return Err(Error::EmptyManifest);
    }
    if !force {
        if let Some(s) = m.samples.iter().find(|s| s.split != Split::Unassigned) {
            return Err(Error::AlreadyAssigned(s.sample_id.clone()));
        }
    }

    let mut by_class: BTreeMap<Label, Vec<usize>> = BTreeMap::new();
    for (i, s) in m.samples.iter().enumerate() {
        by_class.entry(s.label).or_default().push(i);
    }

    let mut out = m.clone();
    for (label, mut idx) in by_class {
        idx.sort_by(|&a, &b| m.samples[a].sample_id.cmp(&m.samples[b].sample_id));
        let mut rng = derive_rng("roiaug/split", spec.seed, &label.token(), 0);
        idx.shuffle(&mut rng);
        let counts = apportion(idx.len(), spec.ratios);
        let mut rest = idx.as_slice();
        for (split, n) in SPLITS.into_iter().zip(counts) {
            let (run, tail) = rest.split_at(n);
            for &i in run {
                out.samples[i].split = split;
            }
            rest = tail;
        }
    }
    Ok(out)
}

/// Per-class sample counts for each split.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SplitReport {
    pub rows: Vec<(Label, SplitCounts)>,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct SplitCounts {
    pub train: usize,
    pub val: usize,
    pub test: usize,
    pub unassigned: usize,
}

impl SplitCounts {
    pub fn total(&self) -> usize {
        self.train + self.val + self.test + self.unassigned
    }

    pub fn get(&self, split: Split) -> usize {
        match split {
            Split::Train => self.train,
            Split::Val => self.val,
            Split::Test => self.test,
            Split::Unassigned => self.unassigned,
        }
    }

    fn bump(&mut self, split: Split) {
        match split {
            Split::Train => self.train += 1,
            Split::Val => self.val += 1,
            Split::Test => self.test += 1,
            Split::Unassigned => self.unassigned += 1,
        }
    }

    fn add(&mut self, o: &SplitCounts) {
        self.train += o.train;
        self.val += o.val;
        self.test += o.test;
        self.unassigned += o.unassigned;
    }
}

pub fn split_report(m: &Manifest) -> SplitReport {
    let rows = m
        .scheme
        .classes()
        .into_iter()
        .map(|c| {
            let mut counts = SplitCounts::default();
            for s in m.samples.iter().filter(|s| s.label == c) {
                counts.bump(s.split);
            }
            (c, counts)
        })
        .collect();
    SplitReport { rows }
}

impl SplitReport {
    pub fn totals(&self) -> SplitCounts {
        let mut t = SplitCounts::default();
        for (_, c) in &self.rows {
            t.add(c);
        }
        t
    }

    pub fn get(&self, label: Label) -> Option<SplitCounts> {
        self.rows.iter().find(|(l, _)| *l == label).map(|(_, c)| *c)
    }

    /// `label,train,val,test` rows plus a `total` row.
    pub fn to_csv(&self) -> String {
        let mut s = String::from("label,train,val,test\n");
        let totals = self.totals();
        let rows = self
            .rows
            .iter()
            .map(|(l, c)| (l.token(), *c))
            .chain([("total".to_string(), totals)]);
        for (name, c) in rows {
            let _ = writeln!(s, "{name},{},{},{}", c.train, c.val, c.test);
        }
        s
    }

    /// Aligned table. An `unassigned` column appears only when non-zero.
    pub fn to_text(&self) -> String {
        let totals = self.totals();
        let show_unassigned = totals.unassigned > 0;
        let mut s = format!("{:<12}{:>8}{:>8}{:>8}", "class", "train", "val", "test");
        if show_unassigned {
            let _ = write!(s, "{:>12}", "unassigned");
        }
        s.push('\n');
        let rows = self
            .rows
            .iter()
            .map(|(l, c)| (l.to_string(), *c))
            .chain([("total".to_string(), totals)]);
        for (name, c) in rows {
            let _ = write!(s, "{name:<12}{:>8}{:>8}{:>8}", c.train, c.val, c.test);
            if show_unassigned {
                let _ = write!(s, "{:>12}", c.unassigned);
            }
            s.push('\n');
        }
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{AnnotatedSample, LabelScheme, SchemeId};

    fn manifest(counts: &[(Label, usize)]) -> Manifest {
        let mut samples = Vec::new();
        for &(label, n) in counts {
            for i in 0..n {
                let id = format!("{}-{i:03}", label.token());
                samples.push(AnnotatedSample::new(id.clone(), format!("{id}.png"), label));
            }
        }
        Manifest::new(LabelScheme::new(counts[0].0.scheme()), samples)
    }

    #[test]
    fn spec_validation() {
        assert!(SplitSpec::new(0.8, 0.0, 0.2, 0).is_ok());
        assert!(SplitSpec::new(0.7, 0.15, 0.15, 0).is_ok());
        assert!(SplitSpec::new(0.8, 0.1, 0.2, 0).is_err());
        assert!(SplitSpec::new(1.2, -0.2, 0.0, 0).is_err());
    }

    #[test]
    fn apportionment() {
        assert_eq!(apportion(10, [0.8, 0.0, 0.2]), [8, 0, 2]);
        assert_eq!(apportion(10, [0.7, 0.0, 0.3]), [7, 0, 3]);
        assert_eq!(apportion(209, [0.8, 0.0, 0.2]), [167, 0, 42]);
        assert_eq!(apportion(61, [0.8, 0.0, 0.2]), [49, 0, 12]);
        assert_eq!(apportion(52, [0.8, 0.0, 0.2]), [42, 0, 10]);
        assert_eq!(apportion(3, [1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0]), [1, 1, 1]);
        assert_eq!(apportion(2, [1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0]), [1, 1, 0]);
        assert_eq!(apportion(0, [0.5, 0.25, 0.25]), [0, 0, 0]);
    }

    #[test]
    fn single_class_exact_division() {
        let m = manifest(&[(Label::Birads(2), 10)]);
        let out = stratified_split(&m, &SplitSpec::new(0.8, 0.0, 0.2, 5).unwrap(), false).unwrap();
        let r = split_report(&out).get(Label::Birads(2)).unwrap();
        assert_eq!((r.train, r.val, r.test), (8, 0, 2));
    }

    #[test]
    fn mias_shape_per_class_counts() {
        let m = manifest(&[
            (Label::Normal, 209),
            (Label::Benign, 61),
            (Label::Malignant, 52),
        ]);
        let out = stratified_split(&m, &SplitSpec::new(0.8, 0.0, 0.2, 1).unwrap(), false).unwrap();
        let r = split_report(&out);
        assert_eq!(
            r.get(Label::Normal).unwrap(),
            SplitCounts {
                train: 167,
                val: 0,
                test: 42,
                unassigned: 0
            }
        );
        assert_eq!(r.totals().train, 258);
        assert_eq!(r.totals().test, 64);
        assert_eq!(r.totals().total(), 322);
    }

    #[test]
    fn deterministic_and_order_independent() {
        let m = manifest(&[
            (Label::Birads(1), 23),
            (Label::Birads(3), 11),
            (Label::Birads(5), 4),
        ]);
        let spec = SplitSpec::new(0.6, 0.2, 0.2, 99).unwrap();
        let a = stratified_split(&m, &spec, false).unwrap();
        assert_eq!(a, stratified_split(&m, &spec, false).unwrap());

        let mut rev = m.clone();
        rev.samples.reverse();
        let b = stratified_split(&rev, &spec, false).unwrap();
        let pairs = |m: &Manifest| {
            let mut v: Vec<_> = m
                .samples
                .iter()
                .map(|s| (s.sample_id.clone(), s.split))
                .collect();
            v.sort();
            v
        };
        assert_eq!(pairs(&a), pairs(&b));

        let other =
            stratified_split(&m, &SplitSpec::new(0.6, 0.2, 0.2, 100).unwrap(), false).unwrap();
        assert_ne!(pairs(&a), pairs(&other));
    }

    #[test]
    fn refuses_reassignment_without_force() {
        let m = manifest(&[(Label::Birads(1), 5)]);
        let spec = SplitSpec::new(0.8, 0.0, 0.2, 0).unwrap();
        let once = stratified_split(&m, &spec, false).unwrap();
        assert!(matches!(
            stratified_split(&once, &spec, false),
            Err(Error::AlreadyAssigned(_))
        ));
        assert_eq!(stratified_split(&once, &spec, true).unwrap(), once);
        assert!(matches!(
            stratified_split(&Manifest::default(), &spec, false),
            Err(Error::EmptyManifest)
        ));
    }

    #[test]
    fn empty_report_is_all_zero() {
        let r = split_report(&Manifest::new(LabelScheme::new(SchemeId::Birads5), vec![]));
        assert_eq!(r.rows.len(), 5);
        assert_eq!(r.totals(), SplitCounts::default());
        assert_eq!(
            r.to_csv(),
            "label,train,val,test\n1,0,0,0\n2,0,0,0\n3,0,0,0\n4,0,0,0\n5,0,0,0\ntotal,0,0,0\n"
        );
        assert!(!r.to_text().contains("unassigned"));
    }
}
