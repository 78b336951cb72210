//! Grayscale image container and binary PGM (P5) ingestion.

use std::fs;
use std::io::Write;
use std::path::Path;

use crate::error::{CodecError, Result};

/// 2D grayscale pixel grid, stored row-major as reals.
///
/// Images ingested from PGM are guaranteed to lie in `[0, 255]`. The same
/// container carries transformed intermediates (mean-subtracted planes,
/// solver iterates), whose values may leave that range; range is restored
/// by clamping when writing back to PGM.
#[derive(Debug, Clone, PartialEq)]
pub struct Image {
    pub width: usize,
    pub height: usize,
    pub pixels: Vec<f64>,
}

impl Image {
    pub fn new(width: usize, height: usize, pixels: Vec<f64>) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(CodecError::InvalidParameter(format!(
                "image dimensions must be positive, got {width}x{height}"
            )));
        }
        if pixels.len() != width * height {
            return Err(CodecError::DimensionMismatch {
                expected: width * height,
                got: pixels.len(),
                context: "image pixel buffer",
            });
        }
        Ok(Self { width, height, pixels })
    }

    pub fn from_u8(width: usize, height: usize, bytes: &[u8]) -> Result<Self> {
        Self::new(width, height, bytes.iter().map(|&b| f64::from(b)).collect())
    }

    pub fn constant(width: usize, height: usize, value: f64) -> Self {
        Self { width, height, pixels: vec![value; width * height] }
    }

    pub fn pixel_count(&self) -> usize {
        self.width * self.height
    }

    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.pixels[row * self.width + col]
    }

    pub fn mean(&self) -> f64 {
        self.pixels.iter().sum::<f64>() / self.pixel_count() as f64
    }

    /// True when every pixel sits in the 8-bit display range.
    pub fn in_display_range(&self) -> bool {
        self.pixels.iter().all(|&p| (0.0..=255.0).contains(&p))
    }

    /// Rounds and clamps to 8-bit values.
    pub fn to_u8(&self) -> Vec<u8> {
        self.pixels.iter().map(|&p| p.round().clamp(0.0, 255.0) as u8).collect()
    }
}

/// Reads a binary PGM (P5) file with maxval 255.
pub fn read_pgm(path: &Path) -> Result<Image> {
    parse_pgm(&fs::read(path)?)
}

/// Parses binary PGM bytes. Accepts `#` comments between header tokens.
pub fn parse_pgm(data: &[u8]) -> Result<Image> {
    if data.len() < 2 || &data[0..2] != b"P5" {
        return Err(CodecError::MalformedPgm("missing P5 magic".into()));
    }
    let mut pos = 2;
    let mut fields = [0usize; 3];
    for field in fields.iter_mut() {
        *field = next_header_value(data, &mut pos)?;
    }
    let [width, height, maxval] = fields;
    if maxval != 255 {
        return Err(CodecError::MalformedPgm(format!(
            "only 8-bit maxval 255 is supported, got {maxval}"
        )));
    }
    // Exactly one whitespace byte separates the header from raster data.
    pos += 1;
    let expected = width
        .checked_mul(height)
        .ok_or_else(|| CodecError::MalformedPgm("dimension overflow".into()))?;
    if expected == 0 {
        return Err(CodecError::MalformedPgm("zero-sized image".into()));
    }
    let raster = data
        .get(pos..pos + expected)
        .ok_or_else(|| CodecError::MalformedPgm("raster data truncated".into()))?;
    Image::from_u8(width, height, raster)
}

fn next_header_value(data: &[u8], pos: &mut usize) -> Result<usize> {
    // Skip whitespace and comment lines.
    loop {
        match data.get(*pos) {
            Some(b) if b.is_ascii_whitespace() => *pos += 1,
            Some(b'#') => {
                while *pos < data.len() && data[*pos] != b'\n' {
                    *pos += 1;
                }
            }
            Some(_) => break,
            None => return Err(CodecError::MalformedPgm("header truncated".into())),
        }
    }
    let start = *pos;
    while *pos < data.len() && data[*pos].is_ascii_digit() {
        *pos += 1;
    }
    if start == *pos {
        return Err(CodecError::MalformedPgm("expected integer in header".into()));
    }
    std::str::from_utf8(&data[start..*pos])
        .ok()
        .and_then(|s| s.parse().ok())
        .ok_or_else(|| CodecError::MalformedPgm("bad integer in header".into()))
}

pub fn write_pgm(path: &Path, img: &Image) -> Result<()> {
    let mut out = Vec::with_capacity(img.pixel_count() + 32);
    write!(out, "P5\n{} {}\n255\n", img.width, img.height)?;
    out.extend_from_slice(&img.to_u8());
    fs::write(path, out)?;
    Ok(())
}
