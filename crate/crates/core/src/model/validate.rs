use std::collections::HashSet;
use std::fmt;
use std::path::Path;

use super::{probe_png, BoundingBox, Manifest};

/// One dataset inconsistency. Violations are data, not failures.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Violation {
    DuplicateId {
        sample_id: String,
    },
    LabelOutsideScheme {
        sample_id: String,
    },
    MissingFile {
        sample_id: String,
        path: String,
    },
    UnreadableImage {
        sample_id: String,
        reason: String,
    },
    NotGrayscale {
        sample_id: String,
    },
    InvertedBox {
        sample_id: String,
        lesion: usize,
        bbox: BoundingBox,
    },
    OutOfBounds {
        sample_id: String,
        lesion: usize,
        bbox: BoundingBox,
        width: u32,
        height: u32,
    },
}

impl Violation {
    pub fn sample_id(&self) -> &str {
        match self {
            Violation::DuplicateId { sample_id }
            | Violation::LabelOutsideScheme { sample_id }
            | Violation::MissingFile { sample_id, .. }
            | Violation::UnreadableImage { sample_id, .. }
            | Violation::NotGrayscale { sample_id }
            | Violation::InvertedBox { sample_id, .. }
            | Violation::OutOfBounds { sample_id, .. } => sample_id,
        }
    }

    pub fn code(&self) -> &'static str {
        match self {
            Violation::DuplicateId { .. } => "duplicate_id",
            Violation::LabelOutsideScheme { .. } => "label_outside_scheme",
            Violation::MissingFile { .. } => "missing_file",
            Violation::UnreadableImage { .. } => "unreadable_image",
            Violation::NotGrayscale { .. } => "not_grayscale",
            Violation::InvertedBox { .. } => "inverted_box",
            Violation::OutOfBounds { .. } => "out_of_bounds",
        }
    }
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}\t{}\t", self.code(), self.sample_id())?;
        match self {
            Violation::DuplicateId { .. } => f.write_str("sample id appears more than once"),
            Violation::LabelOutsideScheme { .. } => f.write_str("label not in manifest scheme"),
            Violation::MissingFile { path, .. } => write!(f, "{path} not found"),
            Violation::UnreadableImage { reason, .. } => f.write_str(reason),
            Violation::NotGrayscale { .. } => f.write_str("image is not single-channel"),
            Violation::InvertedBox { lesion, bbox, .. } => {
                write!(f, "lesion {lesion} box {bbox} is inverted")
            }
            Violation::OutOfBounds {
                lesion,
                bbox,
                width,
                height,
                ..
            } => write!(f, "lesion {lesion} box {bbox} exceeds {width}x{height}"),
        }
    }
}

/// Check every sample against its image on disk. Returns all violations, in
/// manifest order; an empty list means the dataset is consistent.
pub fn validate_manifest(m: &Manifest, image_root: impl AsRef<Path>) -> Vec<Violation> {
    let root = image_root.as_ref();
    let mut out = Vec::new();
    let mut seen = HashSet::new();
    for s in &m.samples {
        let id = || s.sample_id.clone();
        if !seen.insert(s.sample_id.as_str()) {
            out.push(Violation::DuplicateId { sample_id: id() });
        }
        if !m.scheme.contains(s.label) {
            out.push(Violation::LabelOutsideScheme { sample_id: id() });
        }
        for (lesion, l) in s.lesions.iter().enumerate() {
            if l.bbox.is_inverted() {
                out.push(Violation::InvertedBox {
                    sample_id: id(),
                    lesion,
                    bbox: l.bbox,
                });
            }
        }

        let path = root.join(&s.image_path);
        if !path.is_file() {
            out.push(Violation::MissingFile {
                sample_id: id(),
                path: s.image_path.clone(),
            });
            continue;
        }
        let (width, height) = match probe_png(&path) {
            Ok((w, h, ct)) => {
                if ct.channel_count() != 1 {
                    out.push(Violation::NotGrayscale { sample_id: id() });
                }
                (w, h)
            }
            Err(e) => {
                out.push(Violation::UnreadableImage {
                    sample_id: id(),
                    reason: e.to_string(),
                });
                continue;
            }
        };
        for (lesion, l) in s.lesions.iter().enumerate() {
            if !l.bbox.fits(width, height) {
                out.push(Violation::OutOfBounds {
                    sample_id: id(),
                    lesion,
                    bbox: l.bbox,
                    width,
                    height,
                });
            }
        }
    }
    out
}
