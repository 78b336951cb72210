//! Uniform scalar quantization of measurements to b-bit indices and
//! midpoint dequantization.

use crate::error::{CodecError, Result};

/// Quantizer parameters shared by every block of an image. The range
/// bounds travel in the header as `f32`, so they are stored as `f32`
/// here and widened on use; encoder and decoder then quantize against
/// exactly the same cell edges.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuantizerConfig {
    pub bit_depth: u8,
    lower: f32,
    upper: f32,
}

impl QuantizerConfig {
    pub fn new(bit_depth: u8, lower: f32, upper: f32) -> Result<Self> {
        if !(1..=16).contains(&bit_depth) {
            return Err(CodecError::InvalidParameter(format!(
                "bit depth must be in 1..=16, got {bit_depth}"
            )));
        }
        if !lower.is_finite() || !upper.is_finite() || lower >= upper {
            return Err(CodecError::InvalidParameter(format!(
                "quantizer range [{lower}, {upper}] is not a proper interval"
            )));
        }
        Ok(Self { bit_depth, lower, upper })
    }

    pub fn levels(&self) -> u32 {
        1u32 << self.bit_depth
    }

    pub fn lower(&self) -> f64 {
        self.lower as f64
    }

    pub fn upper(&self) -> f64 {
        self.upper as f64
    }

    pub fn lower_raw(&self) -> f32 {
        self.lower
    }

    pub fn upper_raw(&self) -> f32 {
        self.upper
    }

    /// Cell width.
    pub fn step(&self) -> f64 {
        (self.upper() - self.lower()) / self.levels() as f64
    }
}

/// Indices of one quantized measurement vector.
#[derive(Debug, Clone, PartialEq)]
pub struct QuantizedBlock {
    pub indices: Vec<u16>,
    pub config: QuantizerConfig,
}

/// Fits the quantizer range to the observed samples: plain min/max, with
/// a degenerate all-equal input widened to a unit interval around the
/// common value so the step stays positive.
pub fn fit_range(bit_depth: u8, samples: &[f64]) -> Result<QuantizerConfig> {
    if samples.is_empty() {
        return Err(CodecError::EmptyInput("quantizer range fit"));
    }
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for &v in samples {
        if !v.is_finite() {
            return Err(CodecError::NonFiniteSample);
        }
        lo = lo.min(v);
        hi = hi.max(v);
    }
    if lo == hi {
        lo -= 0.5;
        hi += 0.5;
    }
    // Round outward through f32 so the header-encoded range still covers
    // every sample.
    let mut lo32 = lo as f32;
    let mut hi32 = hi as f32;
    if (lo32 as f64) > lo {
        lo32 = f32_prev(lo32);
    }
    if (hi32 as f64) < hi {
        hi32 = f32_next(hi32);
    }
    QuantizerConfig::new(bit_depth, lo32, hi32)
}

fn f32_next(v: f32) -> f32 {
    f32::from_bits(if v >= 0.0 { v.to_bits() + 1 } else { v.to_bits() - 1 })
}

fn f32_prev(v: f32) -> f32 {
    f32::from_bits(if v > 0.0 { v.to_bits() - 1 } else { v.to_bits() + 1 })
}

/// Maps each value to its cell index, clamping out-of-range values to the
/// end cells.
pub fn quantize(values: &[f64], cfg: &QuantizerConfig) -> Result<QuantizedBlock> {
    let step = cfg.step();
    let max_index = (cfg.levels() - 1) as f64;
    let mut indices = Vec::with_capacity(values.len());
    for &v in values {
        if !v.is_finite() {
            return Err(CodecError::NonFiniteSample);
        }
        let cell = ((v - cfg.lower()) / step).floor().clamp(0.0, max_index);
        indices.push(cell as u16);
    }
    Ok(QuantizedBlock { indices, config: *cfg })
}

/// Reconstructs each index as its cell midpoint.
pub fn dequantize(q: &QuantizedBlock) -> Result<Vec<f64>> {
    let step = q.config.step();
    let levels = q.config.levels();
    q.indices
        .iter()
        .map(|&i| {
            if u32::from(i) >= levels {
                return Err(CodecError::IndexOutOfRange { index: i, levels });
            }
            Ok(q.config.lower() + (f64::from(i) + 0.5) * step)
        })
        .collect()
}

/// High-rate distortion model for uniformly quantized Gaussian samples:
/// `D = (pi/6) * variance * 2^(-2 * rate_bits)`.
pub fn predicted_distortion(variance: f64, rate_bits: f64) -> f64 {
    (std::f64::consts::PI / 6.0) * variance * (-2.0 * rate_bits).exp2()
}
