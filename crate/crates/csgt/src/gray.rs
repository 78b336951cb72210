//! Gray transformation: shift pixels by a constant before sampling so the
//! measurements concentrate around zero, then undo the shift in the
//! measurement domain at the decoder.

use crate::error::{CodecError, Result};
use crate::image::Image;
use crate::sensing::MeasurementMatrix;

/// Gray constant carried in the bitstream header. Stored as `f32` so the
/// encoder and decoder agree bit-for-bit on the value actually used.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GrayConstant(f32);

impl GrayConstant {
    pub fn new(a: f32) -> Result<Self> {
        if !a.is_finite() {
            return Err(CodecError::InvalidParameter(format!(
                "gray constant must be finite, got {a}"
            )));
        }
        Ok(Self(a))
    }

    pub fn zero() -> Self {
        Self(0.0)
    }

    pub fn value(&self) -> f64 {
        self.0 as f64
    }

    pub fn raw(&self) -> f32 {
        self.0
    }
}

/// The mean minimizes the shifted image's energy, which by the variance
/// law below also minimizes the spread of the measurements.
pub fn optimal_constant(img: &Image) -> GrayConstant {
    GrayConstant(img.mean() as f32)
}

/// `x' = x - a` applied to every pixel.
pub fn forward_transform(img: &Image, a: GrayConstant) -> Image {
    let shift = a.value();
    Image {
        width: img.width,
        height: img.height,
        pixels: img.pixels.iter().map(|&p| p - shift).collect(),
    }
}

/// Measurement of the constant image `a * ones`: `y_a[i] = a * sum_j Phi[i][j]`.
/// The decoder adds this back to recover measurements of the original block.
pub fn measurement_offset(matrix: &MeasurementMatrix, a: GrayConstant) -> Vec<f64> {
    matrix.row_sums().iter().map(|s| s * a.value()).collect()
}

/// `y = y' + y_a`, the measurement-domain inverse of the gray transform.
pub fn inverse_transform(shifted: &[f64], offset: &[f64]) -> Result<Vec<f64>> {
    if shifted.len() != offset.len() {
        return Err(CodecError::DimensionMismatch {
            expected: offset.len(),
            got: shifted.len(),
            context: "shifted measurements vs offset length",
        });
    }
    Ok(shifted.iter().zip(offset).map(|(y, ya)| y + ya).collect())
}

/// Predicted variance of one measurement of the shifted image:
/// `Var(y'_i) = (1/M) * sum_j (x_j - a)^2` over the whole image.
///
/// With scrambling, every block is a uniform draw from the image's pixels,
/// so the per-block prediction is this total divided by the block count.
pub fn predicted_variance(img: &Image, a: GrayConstant, m: usize) -> f64 {
    let shift = a.value();
    let energy: f64 = img.pixels.iter().map(|&p| (p - shift) * (p - shift)).sum();
    energy / m as f64
}
