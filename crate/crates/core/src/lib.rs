//! ROI-aware augmentation for lesion-annotated grayscale images.
//!
//! Two augmenters share one masking core:
//!
//! * **transparency** keeps every pixel inside the lesion boxes and scales the
//!   rest of the image by a random `alpha`, preserving the label;
//! * **CutMix** copies the lesion boxes of a high-risk image onto a low-risk
//!   background image, taking the high-risk label.
//!
//! Around them sit the dataset plumbing: manifest CSV I/O and validation,
//! crop / flip / resize preprocessing, stratified splitting and macro-F1
//! evaluation.

pub mod augment;
pub mod error;
pub mod masking;
pub mod metrics;
pub mod model;
mod paths;
pub mod preprocess;
pub mod rng;
pub mod split;
pub mod synthetic;

pub use augment::{
    build_plan, cutmix, execute_plan, sample_alpha, transparency, AlphaRange, AugmentPlan,
    PlanRecord, Strategy,
};
pub use error::{Error, ErrorClass, Result};
pub use masking::{apply_mask, blend, build_mask, Mask};
pub use metrics::{confusion, f1_per_class, macro_f1, ConfusionMatrix, MetricsReport, Prediction};
pub use model::{
    parse_manifest, serialize_manifest, validate_manifest, AnnotatedSample, BitDepth, BoundingBox,
    Image, Label, LabelScheme, Lesion, Manifest, SchemeId, Split, Violation,
};
pub use paths::relative_path;
pub use preprocess::{
    crop, detect_foreground, flip_horizontal, laterality, preprocess_image, resize, CropResult,
    Laterality, PreprocessOptions,
};
pub use split::{split_report, stratified_split, SplitReport, SplitSpec};
