//! Domain types, label taxonomy and the manifest file format.

mod image;
mod label;
mod manifest;
mod validate;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use self::image::{probe_png, BitDepth, Image};
pub use label::{Label, LabelScheme, SchemeId};
pub use manifest::{
    parse_manifest, read_manifest, serialize_manifest, write_manifest, MANIFEST_HEADER,
};
pub use validate::{validate_manifest, Violation};

/// Inclusive pixel rectangle. `x` indexes columns, `y` rows, both 0-based.
///
/// The fields are public so that malformed boxes read from disk can still be
/// represented and reported; operations check [`BoundingBox::check_within`].
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct BoundingBox {
    pub x_min: u32,
    pub y_min: u32,
    pub x_max: u32,
    pub y_max: u32,
}

impl BoundingBox {
    pub const fn new(x_min: u32, y_min: u32, x_max: u32, y_max: u32) -> Self {
        Self {
            x_min,
            y_min,
            x_max,
            y_max,
        }
    }

    /// The box covering a whole `width` x `height` frame.
    pub fn full(width: u32, height: u32) -> Self {
        Self::new(0, 0, width.saturating_sub(1), height.saturating_sub(1))
    }

    pub fn is_inverted(&self) -> bool {
        self.x_min > self.x_max || self.y_min > self.y_max
    }

    pub fn width(&self) -> u32 {
        self.x_max - self.x_min + 1
    }

    pub fn height(&self) -> u32 {
        self.y_max - self.y_min + 1
    }

    pub fn area(&self) -> u64 {
        self.width() as u64 * self.height() as u64
    }

    pub fn contains(&self, x: u32, y: u32) -> bool {
        self.x_min <= x && x <= self.x_max && self.y_min <= y && y <= self.y_max
    }

    pub fn fits(&self, width: u32, height: u32) -> bool {
        self.x_max < width && self.y_max < height
    }

    /// Errors unless the box is well-formed and inside the frame.
    pub fn check_within(&self, width: u32, height: u32) -> Result<()> {
        if self.is_inverted() {
            return Err(Error::InvertedBox(*self));
        }
        if !self.fits(width, height) {
            return Err(Error::BoxOutOfBounds {
                bbox: *self,
                width,
                height,
            });
        }
        Ok(())
    }

    pub fn intersection(&self, other: &BoundingBox) -> Option<BoundingBox> {
        let b = BoundingBox::new(
            self.x_min.max(other.x_min),
            self.y_min.max(other.y_min),
            self.x_max.min(other.x_max),
            self.y_max.min(other.y_max),
        );
        (!b.is_inverted()).then_some(b)
    }

    pub fn union(&self, other: &BoundingBox) -> BoundingBox {
        BoundingBox::new(
            self.x_min.min(other.x_min),
            self.y_min.min(other.y_min),
            self.x_max.max(other.x_max),
            self.y_max.max(other.y_max),
        )
    }
}

impl fmt::Display for BoundingBox {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "({},{})-({},{})",
            self.x_min, self.y_min, self.x_max, self.y_max
        )
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Split {
    Train,
    Val,
    Test,
    Unassigned,
}

impl Split {
    pub const ALL: [Split; 4] = [Split::Train, Split::Val, Split::Test, Split::Unassigned];

    pub fn as_str(self) -> &'static str {
        match self {
            Split::Train => "train",
            Split::Val => "val",
            Split::Test => "test",
            Split::Unassigned => "unassigned",
        }
    }
}

impl FromStr for Split {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        Split::ALL
            .into_iter()
            .find(|sp| sp.as_str() == s.trim())
            .ok_or_else(|| format!("unknown split {s:?}"))
    }
}

impl fmt::Display for Split {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// An annotated lesion: box plus free-form type tag such as `discrete_mass`.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Lesion {
    pub bbox: BoundingBox,
    pub lesion_type: String,
}

impl Lesion {
    pub fn new(bbox: BoundingBox, lesion_type: impl Into<String>) -> Self {
        Self {
            bbox,
            lesion_type: lesion_type.into(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct AnnotatedSample {
    pub sample_id: String,
    /// Relative to the dataset's image root.
    pub image_path: String,
    pub label: Label,
    pub lesions: Vec<Lesion>,
    pub split: Split,
}

impl AnnotatedSample {
    pub fn new(sample_id: impl Into<String>, image_path: impl Into<String>, label: Label) -> Self {
        Self {
            sample_id: sample_id.into(),
            image_path: image_path.into(),
            label,
            lesions: Vec::new(),
            split: Split::Unassigned,
        }
    }

    pub fn with_lesion(mut self, bbox: BoundingBox, lesion_type: impl Into<String>) -> Self {
        self.lesions.push(Lesion::new(bbox, lesion_type));
        self
    }

    pub fn with_split(mut self, split: Split) -> Self {
        self.split = split;
        self
    }

    pub fn boxes(&self) -> Vec<BoundingBox> {
        self.lesions.iter().map(|l| l.bbox).collect()
    }
}

/// Ordered dataset index.
#[derive(Clone, Debug, PartialEq, Eq, Default)]
pub struct Manifest {
    pub scheme: LabelScheme,
    pub samples: Vec<AnnotatedSample>,
}

impl Manifest {
    pub fn new(scheme: LabelScheme, samples: Vec<AnnotatedSample>) -> Self {
        Self { scheme, samples }
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn get(&self, sample_id: &str) -> Option<&AnnotatedSample> {
        self.samples.iter().find(|s| s.sample_id == sample_id)
    }

    /// Copy restricted to one split.
    pub fn filter_split(&self, split: Split) -> Manifest {
        Manifest {
            scheme: self.scheme.clone(),
            samples: self
                .samples
                .iter()
                .filter(|s| s.split == split)
                .cloned()
                .collect(),
        }
    }

    /// Sample count per class, in scheme order.
    pub fn class_histogram(&self) -> Vec<(Label, usize)> {
        self.scheme
            .classes()
            .into_iter()
            .map(|c| (c, self.samples.iter().filter(|s| s.label == c).count()))
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn box_geometry() {
        let a = BoundingBox::new(1, 1, 4, 4);
        let b = BoundingBox::new(3, 0, 8, 2);
        assert_eq!(a.intersection(&b), Some(BoundingBox::new(3, 1, 4, 2)));
        assert_eq!(a.union(&b), BoundingBox::new(1, 0, 8, 4));
        assert_eq!(a.intersection(&BoundingBox::new(5, 5, 6, 6)), None);
        assert_eq!(a.area(), 16);
        assert!(a.check_within(5, 5).is_ok());
        assert!(matches!(
            a.check_within(4, 5),
            Err(Error::BoxOutOfBounds { .. })
        ));
        assert!(matches!(
            BoundingBox::new(3, 0, 2, 0).check_within(9, 9),
            Err(Error::InvertedBox(_))
        ));
    }

    #[test]
    fn split_tokens() {
        for s in Split::ALL {
            assert_eq!(s.as_str().parse::<Split>().unwrap(), s);
        }
        assert!("training".parse::<Split>().is_err());
    }
}
