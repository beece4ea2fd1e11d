//! Confusion matrices and per-class / macro F1.
//!
//! Any 0/0 in precision, recall or F1 is defined as 0, and classes without
//! support still count in the macro mean.

use std::collections::{HashMap, HashSet};
use std::fmt::Write as _;
use std::fs::File;
use std::io::Read;
use std::path::Path;

use crate::error::{Error, Result};
use crate::model::{Label, LabelScheme, Manifest};

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Prediction {
    pub sample_id: String,
    pub label: Label,
}

/// Read a `sample_id,predicted_label` file.
pub fn parse_predictions(path: impl AsRef<Path>, scheme: &LabelScheme) -> Result<Vec<Prediction>> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    read_predictions(file, scheme)
}

pub fn read_predictions(reader: impl Read, scheme: &LabelScheme) -> Result<Vec<Prediction>> {
    let mut rdr = csv::ReaderBuilder::new().flexible(true).from_reader(reader);
    let header = rdr.headers().map_err(|e| Error::MalformedRow {
        line: 1,
        reason: e.to_string(),
    })?;
    if header.iter().ne(["sample_id", "predicted_label"]) {
        return Err(Error::MalformedRow {
            line: 1,
            reason: "expected header sample_id,predicted_label".into(),
        });
    }
    let mut out = Vec::new();
    for rec in rdr.records() {
        let rec = rec.map_err(|e| Error::MalformedRow {
            line: e.position().map_or(0, |p| p.line()),
            reason: e.to_string(),
        })?;
        let line = rec.position().map_or(0, |p| p.line());
        if rec.len() != 2 {
            return Err(Error::MalformedRow {
                line,
                reason: format!("expected 2 columns, found {}", rec.len()),
            });
        }
        let token = rec[1].trim();
        let label = scheme
            .parse_label(token)
            .ok_or_else(|| Error::UnknownLabel {
                line,
                token: token.to_string(),
            })?;
        out.push(Prediction {
            sample_id: rec[0].trim().to_string(),
            label,
        });
    }
    Ok(out)
}

/// Rows are true classes, columns predicted classes.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ConfusionMatrix {
    classes: Vec<Label>,
    counts: Vec<Vec<u64>>,
}

impl ConfusionMatrix {
    pub fn from_counts(classes: Vec<Label>, counts: Vec<Vec<u64>>) -> Result<Self> {
        let k = classes.len();
        if counts.len() != k || counts.iter().any(|r| r.len() != k) {
            return Err(Error::InvalidField {
                field: "confusion matrix",
                reason: format!("counts must be {k}x{k}"),
            });
        }
        Ok(Self { classes, counts })
    }

    pub fn classes(&self) -> &[Label] {
        &self.classes
    }

    pub fn counts(&self) -> &[Vec<u64>] {
        &self.counts
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().flatten().sum()
    }

    fn tp_fp_fn(&self, k: usize) -> (u64, u64, u64) {
        let tp = self.counts[k][k];
        let predicted: u64 = self.counts.iter().map(|r| r[k]).sum();
        let actual: u64 = self.counts[k].iter().sum();
        (tp, predicted - tp, actual - tp)
    }
}

/// Score every truth sample against its prediction.
pub fn confusion(truth: &Manifest, predictions: &[Prediction]) -> Result<ConfusionMatrix> {
    let classes = truth.scheme.classes();
    let index: HashMap<Label, usize> = classes.iter().enumerate().map(|(i, &c)| (c, i)).collect();
    let truth_ids: HashSet<&str> = truth.samples.iter().map(|s| s.sample_id.as_str()).collect();

    let mut predicted: HashMap<&str, Label> = HashMap::with_capacity(predictions.len());
    for p in predictions {
        if !truth_ids.contains(p.sample_id.as_str()) {
            return Err(Error::UnknownSample(p.sample_id.clone()));
        }
        if !truth.scheme.contains(p.label) {
            return Err(Error::UnknownLabel {
                line: 0,
                token: p.label.token(),
            });
        }
        if predicted.insert(&p.sample_id, p.label).is_some() {
            return Err(Error::DuplicatePrediction(p.sample_id.clone()));
        }
    }

    let k = classes.len();
    let mut counts = vec![vec![0u64; k]; k];
    for s in &truth.samples {
        let p = predicted
            .get(s.sample_id.as_str())
            .ok_or_else(|| Error::MissingPrediction(s.sample_id.clone()))?;
        counts[index[&s.label]][index[p]] += 1;
    }
    Ok(ConfusionMatrix { classes, counts })
}

fn ratio(num: u64, den: u64) -> f64 {
    if den == 0 {
        0.0
    } else {
        num as f64 / den as f64
    }
}

pub fn precision_per_class(cm: &ConfusionMatrix) -> Vec<f64> {
    (0..cm.classes.len())
        .map(|k| {
            let (tp, fp, _) = cm.tp_fp_fn(k);
            ratio(tp, tp + fp)
        })
        .collect()
}

pub fn recall_per_class(cm: &ConfusionMatrix) -> Vec<f64> {
    (0..cm.classes.len())
        .map(|k| {
            let (tp, _, fn_) = cm.tp_fp_fn(k);
            ratio(tp, tp + fn_)
        })
        .collect()
}

/// `2PR / (P + R)` per class.
pub fn f1_per_class(cm: &ConfusionMatrix) -> Vec<f64> {
    precision_per_class(cm)
        .into_iter()
        .zip(recall_per_class(cm))
        .map(|(p, r)| {
            if p + r == 0.0 {
                0.0
            } else {
                2.0 * p * r / (p + r)
            }
        })
        .collect()
}

/// Unweighted mean of the per-class F1 scores.
pub fn macro_f1(cm: &ConfusionMatrix) -> f64 {
    let f1 = f1_per_class(cm);
    if f1.is_empty() {
        0.0
    } else {
        f1.iter().sum::<f64>() / f1.len() as f64
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct MetricsReport {
    pub classes: Vec<Label>,
    pub precision: Vec<f64>,
    pub recall: Vec<f64>,
    pub f1: Vec<f64>,
    pub macro_f1: f64,
    pub support: Vec<u64>,
}

impl MetricsReport {
    pub fn new(cm: &ConfusionMatrix) -> Self {
        Self {
            classes: cm.classes.clone(),
            precision: precision_per_class(cm),
            recall: recall_per_class(cm),
            f1: f1_per_class(cm),
            macro_f1: macro_f1(cm),
            support: cm.counts.iter().map(|r| r.iter().sum()).collect(),
        }
    }

    /// `class,precision,recall,f1` rows and a `macro_f1` footer.
    pub fn to_csv(&self) -> String {
        let mut s = String::from("class,precision,recall,f1\n");
        for (i, c) in self.classes.iter().enumerate() {
            let _ = writeln!(
                s,
                "{},{:.6},{:.6},{:.6}",
                c.token(),
                self.precision[i],
                self.recall[i],
                self.f1[i]
            );
        }
        let _ = writeln!(s, "macro_f1,,,{:.6}", self.macro_f1);
        s
    }

    pub fn to_text(&self) -> String {
        let mut s = format!(
            "{:<12}{:>10}{:>10}{:>10}{:>10}\n",
            "class", "precision", "recall", "f1", "support"
        );
        for (i, c) in self.classes.iter().enumerate() {
            let _ = writeln!(
                s,
                "{:<12}{:>10.4}{:>10.4}{:>10.4}{:>10}",
                c.to_string(),
                self.precision[i],
                self.recall[i],
                self.f1[i],
                self.support[i]
            );
        }
        let _ = writeln!(s, "{:<12}{:>30.4}", "macro F1", self.macro_f1);
        s
    }
}
