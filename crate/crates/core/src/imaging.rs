//! Binary PPM images and per-pixel correction.

use rayon::prelude::*;
use thiserror::Error;

use crate::balancing::ColorCorrector;
use crate::color::{srgb_to_xyz, xyz_to_srgb, BitDepth};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ImageError {
    #[error("malformed PPM at byte {offset}: {message}")]
    Format { offset: usize, message: String },
    #[error("image dimensions {width}x{height} do not match {pixels} pixels")]
    Dimensions { width: usize, height: usize, pixels: usize },
    #[error("failed to build worker pool: {0}")]
    Workers(String),
}

fn format_error(offset: usize, message: impl Into<String>) -> ImageError {
    ImageError::Format { offset, message: message.into() }
}

/// Display-encoded sRGB raster, row-major.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RasterImage {
    width: usize,
    height: usize,
    bit_depth: BitDepth,
    pixels: Vec<[u16; 3]>,
}

impl RasterImage {
    pub fn new(width: usize, height: usize, bit_depth: BitDepth, pixels: Vec<[u16; 3]>) -> Result<Self, ImageError> {
        if width == 0 || height == 0 || width.checked_mul(height) != Some(pixels.len()) {
            return Err(ImageError::Dimensions { width, height, pixels: pixels.len() });
        }
        let max = bit_depth.max_value();
        if let Some(i) = pixels.iter().position(|p| p.iter().any(|c| *c > max)) {
            return Err(format_error(0, format!("pixel {i} exceeds maxval {max}")));
        }
        Ok(Self { width, height, bit_depth, pixels })
    }

    /// A `width x height` image filled with `rgb`.
    pub fn filled(width: usize, height: usize, bit_depth: BitDepth, rgb: [u16; 3]) -> Result<Self, ImageError> {
        Self::new(width, height, bit_depth, vec![rgb; width.saturating_mul(height)])
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn bit_depth(&self) -> BitDepth {
        self.bit_depth
    }

    pub fn pixels(&self) -> &[[u16; 3]] {
        &self.pixels
    }

    pub fn pixel(&self, x: usize, y: usize) -> [u16; 3] {
        self.pixels[y * self.width + x]
    }
}

struct HeaderCursor<'a> {
    data: &'a [u8],
    pos: usize,
}

impl HeaderCursor<'_> {
    fn skip_whitespace_and_comments(&mut self) {
        while let Some(&b) = self.data.get(self.pos) {
            if b == b'#' {
                while self.data.get(self.pos).is_some_and(|c| *c != b'\n') {
                    self.pos += 1;
                }
            } else if b.is_ascii_whitespace() {
                self.pos += 1;
            } else {
                break;
            }
        }
    }

    fn number(&mut self, what: &str) -> Result<usize, ImageError> {
        self.skip_whitespace_and_comments();
        let start = self.pos;
        while self.data.get(self.pos).is_some_and(u8::is_ascii_digit) {
            self.pos += 1;
        }
        if start == self.pos {
            return Err(format_error(start, format!("expected {what}")));
        }
        std::str::from_utf8(&self.data[start..self.pos])
            .ok()
            .and_then(|s| s.parse().ok())
            .ok_or_else(|| format_error(start, format!("{what} out of range")))
    }
}

/// Decodes a binary (`P6`) PPM with maxval 255 or 65535.
pub fn read_ppm(bytes: &[u8]) -> Result<RasterImage, ImageError> {
    if bytes.len() < 2 || &bytes[..2] != b"P6" {
        return Err(format_error(0, "missing P6 magic"));
    }
    let mut cursor = HeaderCursor { data: bytes, pos: 2 };
    let width = cursor.number("width")?;
    let height = cursor.number("height")?;
    let maxval_offset = cursor.pos;
    let maxval = cursor.number("maxval")?;
    let bit_depth = BitDepth::from_max_value(u32::try_from(maxval).unwrap_or(0))
        .ok_or_else(|| format_error(maxval_offset, format!("unsupported maxval {maxval}; only 255 and 65535")))?;
    if width == 0 || height == 0 {
        return Err(format_error(maxval_offset, "zero image dimension"));
    }
    // Exactly one whitespace byte separates the header from the samples.
    match bytes.get(cursor.pos) {
        Some(b) if b.is_ascii_whitespace() => cursor.pos += 1,
        _ => return Err(format_error(cursor.pos, "expected whitespace after maxval")),
    }
    let bytes_per_sample = if bit_depth == BitDepth::Eight { 1 } else { 2 };
    let expected = width
        .checked_mul(height)
        .and_then(|n| n.checked_mul(3 * bytes_per_sample))
        .ok_or_else(|| format_error(0, "image too large"))?;
    let data = &bytes[cursor.pos..];
    if data.len() < expected {
        return Err(format_error(bytes.len(), format!("truncated pixel data: {} of {expected} bytes", data.len())));
    }
    let data = &data[..expected];
    let pixels: Vec<[u16; 3]> = match bit_depth {
        BitDepth::Eight => data.chunks_exact(3).map(|c| [c[0], c[1], c[2]].map(u16::from)).collect(),
        BitDepth::Sixteen => data
            .chunks_exact(6)
            .map(|c| {
                [u16::from_be_bytes([c[0], c[1]]), u16::from_be_bytes([c[2], c[3]]), u16::from_be_bytes([c[4], c[5]])]
            })
            .collect(),
    };
    RasterImage::new(width, height, bit_depth, pixels)
}

/// Encodes a binary PPM; 16-bit samples are big-endian.
pub fn write_ppm(image: &RasterImage) -> Vec<u8> {
    let header = format!("P6\n{} {}\n{}\n", image.width, image.height, image.bit_depth.max_value());
    let bytes_per_sample = if image.bit_depth == BitDepth::Eight { 1 } else { 2 };
    let mut out = Vec::with_capacity(header.len() + image.pixels.len() * 3 * bytes_per_sample);
    out.extend_from_slice(header.as_bytes());
    for px in &image.pixels {
        for c in px {
            match image.bit_depth {
                BitDepth::Eight => out.push(*c as u8),
                BitDepth::Sixteen => out.extend_from_slice(&c.to_be_bytes()),
            }
        }
    }
    out
}

/// Decode to XYZ, correct, encode with clamping.
pub fn correct_pixel<C: ColorCorrector + ?Sized>(rgb: [u16; 3], depth: BitDepth, corrector: &C) -> [u16; 3] {
    xyz_to_srgb(corrector.correct(srgb_to_xyz(rgb, depth)), depth)
}

/// Applies `corrector` to every pixel using the global rayon pool.
pub fn correct_image<C: ColorCorrector + Sync + ?Sized>(image: &RasterImage, corrector: &C) -> RasterImage {
    let depth = image.bit_depth;
    let mut pixels = image.pixels.clone();
    pixels
        .par_chunks_mut(image.width)
        .for_each(|row| row.iter_mut().for_each(|px| *px = correct_pixel(*px, depth, corrector)));
    RasterImage { pixels, ..image.clone() }
}

/// [`correct_image`] on a dedicated pool of `workers` threads. Output does not
/// depend on the worker count.
pub fn correct_image_with_workers<C: ColorCorrector + Sync + ?Sized>(
    image: &RasterImage,
    corrector: &C,
    workers: usize,
) -> Result<RasterImage, ImageError> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers.max(1))
        .build()
        .map_err(|e| ImageError::Workers(e.to_string()))?;
    Ok(pool.install(|| correct_image(image, corrector)))
}
