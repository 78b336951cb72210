//! Quality and statistics helpers: PSNR, sample moments, histograms,
//! and empirical entropy.

use crate::error::{CodecError, Result};
use crate::image::Image;

pub fn sample_mean(data: &[f64]) -> f64 {
    if data.is_empty() {
        return 0.0;
    }
    data.iter().sum::<f64>() / data.len() as f64
}

/// Population variance (divide by n); the harness compares pooled
/// measurement samples against a theoretical value, not an estimator.
pub fn sample_variance(data: &[f64]) -> f64 {
    if data.is_empty() {
        return 0.0;
    }
    let mean = sample_mean(data);
    data.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / data.len() as f64
}

pub fn mse(a: &Image, b: &Image) -> Result<f64> {
    if a.width != b.width || a.height != b.height {
        return Err(CodecError::DimensionMismatch {
            expected: a.pixel_count(),
            got: b.pixel_count(),
            context: "image dimensions for mse",
        });
    }
    let sum: f64 = a
        .pixels
        .iter()
        .zip(&b.pixels)
        .map(|(x, y)| (x - y) * (x - y))
        .sum();
    Ok(sum / a.pixel_count() as f64)
}

/// Peak signal-to-noise ratio against an 8-bit peak of 255. Identical
/// images yield positive infinity.
pub fn psnr(reference: &Image, reconstruction: &Image) -> Result<f64> {
    let mse = mse(reference, reconstruction)?;
    if mse == 0.0 {
        return Ok(f64::INFINITY);
    }
    Ok(10.0 * (255.0 * 255.0 / mse).log10())
}

/// Histogram over equal-width bins spanning [min, max]. The top edge is
/// closed so the maximum lands in the last bin.
pub fn histogram(data: &[f64], bins: usize) -> Result<Vec<usize>> {
    if bins == 0 {
        return Err(CodecError::InvalidParameter("histogram needs at least one bin".into()));
    }
    if data.is_empty() {
        return Err(CodecError::EmptyInput("histogram data"));
    }
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for &v in data {
        if !v.is_finite() {
            return Err(CodecError::NonFiniteSample);
        }
        lo = lo.min(v);
        hi = hi.max(v);
    }
    let mut counts = vec![0usize; bins];
    if lo == hi {
        counts[0] = data.len();
        return Ok(counts);
    }
    let width = (hi - lo) / bins as f64;
    for &v in data {
        let idx = (((v - lo) / width) as usize).min(bins - 1);
        counts[idx] += 1;
    }
    Ok(counts)
}

/// Shannon entropy in bits per symbol of the observed index distribution.
pub fn empirical_entropy(indices: &[u16]) -> f64 {
    if indices.is_empty() {
        return 0.0;
    }
    let mut counts = std::collections::HashMap::new();
    for &i in indices {
        *counts.entry(i).or_insert(0usize) += 1;
    }
    let n = indices.len() as f64;
    counts
        .values()
        .map(|&c| {
            let p = c as f64 / n;
            -p * p.log2()
        })
        .sum()
}
