//! Shared inputs for the benchmarks.

use roiaug_core::synthetic::mammogram;
use roiaug_core::{
    AnnotatedSample, BitDepth, BoundingBox, Image, Label, Laterality, Lesion, Split,
};

pub const WIDTH: u32 = 1024;
pub const HEIGHT: u32 = 768;

pub fn lesion_boxes() -> Vec<BoundingBox> {
    vec![
        BoundingBox::new(300, 250, 420, 360),
        BoundingBox::new(380, 320, 470, 430),
    ]
}

/// A high-risk source with two lesions and its 16-bit image.
pub fn source() -> (AnnotatedSample, Image) {
    let boxes = lesion_boxes();
    let mut s = AnnotatedSample::new("src", "src.png", Label::Birads(4)).with_split(Split::Train);
    s.lesions = boxes.iter().map(|&b| Lesion::new(b, "mass")).collect();
    let img = mammogram(
        WIDTH,
        HEIGHT,
        BitDepth::Sixteen,
        Laterality::Left,
        &boxes,
        1,
    )
    .expect("valid size");
    (s, img)
}

/// A low-risk background of the same size.
pub fn background() -> (AnnotatedSample, Image) {
    let s = AnnotatedSample::new("bg", "bg.png", Label::Birads(1)).with_split(Split::Train);
    let img =
        mammogram(WIDTH, HEIGHT, BitDepth::Sixteen, Laterality::Left, &[], 2).expect("valid size");
    (s, img)
}

/// A raw right-breast scan at a typical digitised size, for the preprocessing path.
pub fn raw_scan() -> Image {
    mammogram(1600, 1200, BitDepth::Sixteen, Laterality::Right, &[], 3).expect("valid size")
}
