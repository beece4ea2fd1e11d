use std::path::PathBuf;

use crate::model::{BoundingBox, Label};

pub type Result<T, E = Error> = std::result::Result<T, E>;

/// Broad failure class, used by frontends to pick an exit status.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ErrorClass {
    Io,
    Data,
    Usage,
}

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("cannot decode image {path}: {reason}")]
    ImageDecode { path: PathBuf, reason: String },
    #[error("cannot encode image {path}: {reason}")]
    ImageEncode { path: PathBuf, reason: String },
    #[error("unsupported image {path}: {reason}")]
    UnsupportedImage { path: PathBuf, reason: String },
    #[error("invalid image: {0}")]
    InvalidImage(String),

    #[error("malformed row at line {line}: {reason}")]
    MalformedRow { line: u64, reason: String },
    #[error("unknown label {token:?} at line {line}")]
    UnknownLabel { line: u64, token: String },
    #[error("duplicate sample id {0:?}")]
    DuplicateId(String),
    #[error("invalid field {field}: {reason}")]
    InvalidField { field: &'static str, reason: String },
    #[error("invalid label scheme: {0}")]
    InvalidScheme(String),

    #[error("box {bbox} does not fit a {width}x{height} image")]
    BoxOutOfBounds {
        bbox: BoundingBox,
        width: u32,
        height: u32,
    },
    #[error("inverted box {0}")]
    InvertedBox(BoundingBox),
    #[error("dimension mismatch: {left_w}x{left_h} vs {right_w}x{right_h}")]
    DimensionMismatch {
        left_w: u32,
        left_h: u32,
        right_w: u32,
        right_h: u32,
    },
    #[error("bit depth mismatch: {0} vs {1}")]
    BitDepthMismatch(u8, u8),
    #[error("value {value} for {what} outside [0, 1]")]
    OutOfUnitRange { what: &'static str, value: f64 },

    #[error("sample {0:?} has no lesion boxes")]
    NoLesionBoxes(String),
    #[error("{side} sample {sample_id:?} has label {label}, not eligible as {side}")]
    LabelNotEligible {
        side: &'static str,
        sample_id: String,
        label: Label,
    },
    #[error("invalid alpha range [{low}, {high}]")]
    InvalidAlphaRange { low: f64, high: f64 },
    #[error("no eligible augmentation sources in the train split")]
    NoEligibleSources,
    #[error("no eligible CutMix backgrounds in the train split")]
    NoEligibleBackgrounds,
    #[error("plan references unknown sample {0:?}")]
    PlanInconsistent(String),
    #[error("plan record {index}: {source}")]
    Record {
        index: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("no foreground pixels above threshold")]
    NoForeground,
    #[error("lesion {0} lies outside the crop region")]
    LesionOutsideCrop(usize),
    #[error("invalid target size {0}x{1}")]
    InvalidTargetSize(u32, u32),

    #[error("invalid split ratios: {0}")]
    InvalidRatios(String),
    #[error("sample {0:?} already has a split assignment")]
    AlreadyAssigned(String),
    #[error("manifest is empty")]
    EmptyManifest,

    #[error("prediction for unknown sample {0:?}")]
    UnknownSample(String),
    #[error("missing prediction for sample {0:?}")]
    MissingPrediction(String),
    #[error("duplicate prediction for sample {0:?}")]
    DuplicatePrediction(String),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub fn class(&self) -> ErrorClass {
        match self {
            Error::Io { .. } | Error::ImageEncode { .. } => ErrorClass::Io,
            Error::InvalidAlphaRange { .. }
            | Error::InvalidRatios(_)
            | Error::InvalidTargetSize(..)
            | Error::InvalidScheme(_) => ErrorClass::Usage,
            Error::Record { source, .. } => source.class(),
            _ => ErrorClass::Data,
        }
    }
}
