//! Grayscale pixel buffer and PNG interchange.

use std::fs::File;
use std::io::{BufReader, BufWriter};
use std::path::Path;

use image::codecs::png::{CompressionType, FilterType, PngEncoder};
use image::{ColorType, DynamicImage, ImageBuffer, ImageDecoder, ImageReader, Luma};

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum BitDepth {
    Eight,
    Sixteen,
}

impl BitDepth {
    pub fn bits(self) -> u8 {
        match self {
            BitDepth::Eight => 8,
            BitDepth::Sixteen => 16,
        }
    }

    /// Largest representable intensity, `2^bits - 1`.
    pub fn max_value(self) -> u16 {
        match self {
            BitDepth::Eight => u8::MAX as u16,
            BitDepth::Sixteen => u16::MAX,
        }
    }
}

/// Single-channel image, row-major, `pixels[y * width + x]`.
///
/// 8-bit images store their intensities widened to `u16`; every value stays
/// within [`BitDepth::max_value`].
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Image {
    width: u32,
    height: u32,
    bit_depth: BitDepth,
    pixels: Vec<u16>,
}

impl Image {
    pub fn new(width: u32, height: u32, bit_depth: BitDepth, pixels: Vec<u16>) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::InvalidImage(format!("empty image {width}x{height}")));
        }
        let expected = width as usize * height as usize;
        if pixels.len() != expected {
            return Err(Error::InvalidImage(format!(
                "{} pixels for a {width}x{height} image",
                pixels.len()
            )));
        }
        let max = bit_depth.max_value();
        if let Some(p) = pixels.iter().find(|&&p| p > max) {
            return Err(Error::InvalidImage(format!(
                "intensity {p} exceeds {}-bit range",
                bit_depth.bits()
            )));
        }
        Ok(Self {
            width,
            height,
            bit_depth,
            pixels,
        })
    }

    pub fn filled(width: u32, height: u32, bit_depth: BitDepth, value: u16) -> Result<Self> {
        Self::new(
            width,
            height,
            bit_depth,
            vec![value; width as usize * height as usize],
        )
    }

    /// Build from a generator `f(x, y)`.
    pub fn from_fn(
        width: u32,
        height: u32,
        bit_depth: BitDepth,
        mut f: impl FnMut(u32, u32) -> u16,
    ) -> Result<Self> {
        let mut pixels = Vec::with_capacity(width as usize * height as usize);
        for y in 0..height {
            for x in 0..width {
                pixels.push(f(x, y));
            }
        }
        Self::new(width, height, bit_depth, pixels)
    }

    /// Internal constructor for buffers whose invariants the caller upholds.
    pub(crate) fn from_parts(
        width: u32,
        height: u32,
        bit_depth: BitDepth,
        pixels: Vec<u16>,
    ) -> Self {
        debug_assert_eq!(pixels.len(), width as usize * height as usize);
        Self {
            width,
            height,
            bit_depth,
            pixels,
        }
    }

    pub fn width(&self) -> u32 {
        self.width
    }

    pub fn height(&self) -> u32 {
        self.height
    }

    pub fn bit_depth(&self) -> BitDepth {
        self.bit_depth
    }

    pub fn max_value(&self) -> u16 {
        self.bit_depth.max_value()
    }

    pub fn pixels(&self) -> &[u16] {
        &self.pixels
    }

    pub fn into_pixels(self) -> Vec<u16> {
        self.pixels
    }

    #[inline]
    pub fn get(&self, x: u32, y: u32) -> u16 {
        self.pixels[y as usize * self.width as usize + x as usize]
    }

    pub fn row(&self, y: u32) -> &[u16] {
        let w = self.width as usize;
        let start = y as usize * w;
        &self.pixels[start..start + w]
    }

    pub fn same_dimensions(&self, other_w: u32, other_h: u32) -> Result<()> {
        if self.width == other_w && self.height == other_h {
            Ok(())
        } else {
            Err(Error::DimensionMismatch {
                left_w: self.width,
                left_h: self.height,
                right_w: other_w,
                right_h: other_h,
            })
        }
    }

    /// Decode a grayscale PNG. Colour and alpha images are rejected.
    pub fn load_png(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let reader = ImageReader::open(path)
            .map_err(|e| Error::io(path, e))?
            .with_guessed_format()
            .map_err(|e| Error::io(path, e))?;
        let decoded = reader.decode().map_err(|e| Error::ImageDecode {
            path: path.to_path_buf(),
            reason: e.to_string(),
        })?;
        let (width, height) = (decoded.width(), decoded.height());
        match decoded {
            DynamicImage::ImageLuma8(buf) => Ok(Self::from_parts(
                width,
                height,
                BitDepth::Eight,
                buf.into_raw().into_iter().map(u16::from).collect(),
            )),
            DynamicImage::ImageLuma16(buf) => Ok(Self::from_parts(
                width,
                height,
                BitDepth::Sixteen,
                buf.into_raw(),
            )),
            other => Err(Error::UnsupportedImage {
                path: path.to_path_buf(),
                reason: format!("colour type {:?}, expected L8 or L16", other.color()),
            }),
        }
    }

    /// Encode as an 8- or 16-bit grayscale PNG.
    pub fn save_png(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let file = File::create(path).map_err(|e| Error::io(path, e))?;
        let encoder = PngEncoder::new_with_quality(
            BufWriter::new(file),
            CompressionType::Fast,
            FilterType::Sub,
        );
        let encoded = match self.bit_depth {
            BitDepth::Eight => {
                let raw: Vec<u8> = self.pixels.iter().map(|&p| p as u8).collect();
                ImageBuffer::<Luma<u8>, _>::from_raw(self.width, self.height, raw)
                    .expect("buffer length matches dimensions")
                    .write_with_encoder(encoder)
            }
            BitDepth::Sixteen => {
                ImageBuffer::<Luma<u16>, _>::from_raw(self.width, self.height, self.pixels.clone())
                    .expect("buffer length matches dimensions")
                    .write_with_encoder(encoder)
            }
        };
        encoded.map_err(|e| Error::ImageEncode {
            path: path.to_path_buf(),
            reason: e.to_string(),
        })
    }
}

/// Dimensions and colour type of a PNG, read from its header only.
pub fn probe_png(path: impl AsRef<Path>) -> Result<(u32, u32, ColorType)> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let decoder = image::codecs::png::PngDecoder::new(BufReader::new(file)).map_err(|e| {
        Error::ImageDecode {
            path: path.to_path_buf(),
            reason: e.to_string(),
        }
    })?;
    let (w, h) = decoder.dimensions();
    Ok((w, h, decoder.color_type()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_bad_buffers() {
        assert!(Image::new(0, 4, BitDepth::Eight, vec![]).is_err());
        assert!(Image::new(2, 2, BitDepth::Eight, vec![0; 3]).is_err());
        assert!(Image::new(2, 1, BitDepth::Eight, vec![0, 256]).is_err());
        assert!(Image::new(2, 1, BitDepth::Sixteen, vec![0, 256]).is_ok());
    }

    #[test]
    fn png_round_trip_both_depths() {
        let dir = tempfile::tempdir().unwrap();
        for depth in [BitDepth::Eight, BitDepth::Sixteen] {
            let max = depth.max_value() as u32;
            let img = Image::from_fn(7, 5, depth, |x, y| ((x * 37 + y * 101) % (max + 1)) as u16)
                .unwrap();
            let path = dir.path().join(format!("img{}.png", depth.bits()));
            img.save_png(&path).unwrap();
            assert_eq!(Image::load_png(&path).unwrap(), img);
            let (w, h, ct) = probe_png(&path).unwrap();
            assert_eq!((w, h), (7, 5));
            assert_eq!(ct.channel_count(), 1);
        }
    }

    #[test]
    fn colour_png_is_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("rgb.png");
        image::RgbImage::new(3, 3).save(&path).unwrap();
        assert!(matches!(
            Image::load_png(&path),
            Err(Error::UnsupportedImage { .. })
        ));
    }
}
