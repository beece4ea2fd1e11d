//! Box masks and the element-wise masking operators.
//!
//! A mask is a concrete `width x height` weight field. Weights are 1 inside
//! the union of the boxes and `background` everywhere else, so a binary mask
//! uses `background = 0` and an attenuation mask uses `background = alpha`.

use crate::error::{Error, Result};
use crate::model::{BoundingBox, Image};

#[derive(Clone, Debug, PartialEq)]
pub struct Mask {
    width: u32,
    height: u32,
    weights: Vec<f64>,
}

impl Mask {
    pub fn width(&self) -> u32 {
        self.width
    }

    pub fn height(&self) -> u32 {
        self.height
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    #[inline]
    pub fn weight(&self, x: u32, y: u32) -> f64 {
        self.weights[y as usize * self.width as usize + x as usize]
    }
}

fn check_unit(what: &'static str, value: f64) -> Result<()> {
    if (0.0..=1.0).contains(&value) {
        Ok(())
    } else {
        Err(Error::OutOfUnitRange { what, value })
    }
}

/// Weight 1 inside any box (inclusive bounds), `background` elsewhere.
/// An empty box list gives a uniform background mask.
pub fn build_mask(width: u32, height: u32, boxes: &[BoundingBox], background: f64) -> Result<Mask> {
    check_unit("mask background", background)?;
    for b in boxes {
        b.check_within(width, height)?;
    }
    let w = width as usize;
    let mut weights = vec![background; w * height as usize];
    for b in boxes {
        for y in b.y_min..=b.y_max {
            let row = y as usize * w;
            weights[row + b.x_min as usize..=row + b.x_max as usize].fill(1.0);
        }
    }
    Ok(Mask {
        width,
        height,
        weights,
    })
}

#[inline]
fn quantize(v: f64, max: u16) -> u16 {
    v.round_ties_even().clamp(0.0, max as f64) as u16
}

/// `out = M ⊙ x`, rounded half-to-even and clamped to the bit depth.
pub fn apply_mask(x: &Image, m: &Mask) -> Result<Image> {
    x.same_dimensions(m.width, m.height)?;
    let max = x.max_value();
    let pixels = x
        .pixels()
        .iter()
        .zip(&m.weights)
        .map(|(&p, &w)| {
            if w == 1.0 {
                p
            } else {
                quantize(w * p as f64, max)
            }
        })
        .collect();
    Ok(Image::from_parts(
        x.width(),
        x.height(),
        x.bit_depth(),
        pixels,
    ))
}

/// `out = M ⊙ a + (1 - M) ⊙ b`, rounded half-to-even and clamped.
pub fn blend(a: &Image, b: &Image, m: &Mask) -> Result<Image> {
    a.same_dimensions(b.width(), b.height())?;
    a.same_dimensions(m.width, m.height)?;
    if a.bit_depth() != b.bit_depth() {
        return Err(Error::BitDepthMismatch(
            a.bit_depth().bits(),
            b.bit_depth().bits(),
        ));
    }
    let max = a.max_value();
    let pixels = a
        .pixels()
        .iter()
        .zip(b.pixels())
        .zip(&m.weights)
        .map(|((&pa, &pb), &w)| {
            if w == 1.0 {
                pa
            } else if w == 0.0 {
                pb
            } else {
                quantize(w * pa as f64 + (1.0 - w) * pb as f64, max)
            }
        })
        .collect();
    Ok(Image::from_parts(
        a.width(),
        a.height(),
        a.bit_depth(),
        pixels,
    ))
}
