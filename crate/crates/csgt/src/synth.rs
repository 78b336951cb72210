//! Deterministic synthetic grayscale test images.
//!
//! The benchmark corpus is generated rather than shipped: each preset
//! layers smooth intensity hills, soft-edged shapes, and low-amplitude
//! filtered texture, then normalizes to a target mean and standard
//! deviation matching typical 8-bit photographs. Generation is a pure
//! function of (preset, size), so every run of the harness sees
//! identical pixels.

use crate::image::Image;
use crate::rng::SeededRng;

#[derive(Debug, Clone, Copy)]
pub struct SynthSpec {
    pub seed: u64,
    /// Count of smooth Gaussian intensity hills.
    pub bumps: usize,
    /// Count of soft-edged discs.
    pub discs: usize,
    /// Amplitude of the blurred-noise texture layer, in gray levels
    /// before normalization.
    pub texture: f64,
    /// Box-blur passes applied to the texture layer.
    pub blur_passes: usize,
    /// Amplitude of a diagonal sinusoidal weave, for directional detail.
    pub weave: f64,
    pub target_mean: f64,
    pub target_std: f64,
}

/// The three bench presets, ordered easiest to hardest.
pub fn presets() -> Vec<(&'static str, SynthSpec)> {
    vec![
        (
            "ridge",
            SynthSpec {
                seed: 101,
                bumps: 7,
                discs: 3,
                texture: 6.5,
                blur_passes: 1,
                weave: 0.0,
                target_mean: 152.0,
                target_std: 40.0,
            },
        ),
        (
            "craters",
            SynthSpec {
                seed: 202,
                bumps: 5,
                discs: 9,
                texture: 7.0,
                blur_passes: 2,
                weave: 0.0,
                target_mean: 142.0,
                target_std: 43.0,
            },
        ),
        (
            "terrace",
            SynthSpec {
                seed: 303,
                bumps: 6,
                discs: 5,
                texture: 4.5,
                blur_passes: 2,
                weave: 4.0,
                target_mean: 150.0,
                target_std: 38.0,
            },
        ),
    ]
}

/// Generates the named corpus at the given square size.
pub fn corpus(size: usize) -> Vec<(String, Image)> {
    presets()
        .into_iter()
        .map(|(name, spec)| (name.to_string(), generate(&spec, size, size)))
        .collect()
}

pub fn generate(spec: &SynthSpec, width: usize, height: usize) -> Image {
    let mut rng = SeededRng::new(spec.seed);
    let (wf, hf) = (width as f64, height as f64);
    let mut field = vec![0.0f64; width * height];

    for _ in 0..spec.bumps {
        let cx = rng.next_f64() * wf;
        let cy = rng.next_f64() * hf;
        let sigma = (0.12 + 0.25 * rng.next_f64()) * wf;
        let amp = if rng.next_f64() < 0.5 { -1.0 } else { 1.0 } * (20.0 + 40.0 * rng.next_f64());
        add_bump(&mut field, width, height, cx, cy, sigma, amp);
    }

    for _ in 0..spec.discs {
        let cx = rng.next_f64() * wf;
        let cy = rng.next_f64() * hf;
        let radius = (0.06 + 0.14 * rng.next_f64()) * wf;
        let edge = 1.0 + 2.0 * rng.next_f64();
        let amp = if rng.next_f64() < 0.5 { -1.0 } else { 1.0 } * (25.0 + 35.0 * rng.next_f64());
        add_disc(&mut field, width, height, cx, cy, radius, edge, amp);
    }

    if spec.weave > 0.0 {
        let freq = 2.0 * std::f64::consts::PI * (3.0 + 3.0 * rng.next_f64()) / wf;
        let phase = rng.next_f64() * std::f64::consts::TAU;
        for r in 0..height {
            for c in 0..width {
                let t = freq * (0.8 * c as f64 + 0.6 * r as f64) + phase;
                field[r * width + c] += spec.weave * t.sin();
            }
        }
    }

    if spec.texture > 0.0 {
        let mut noise: Vec<f64> =
            (0..width * height).map(|_| rng.next_gaussian()).collect();
        for _ in 0..spec.blur_passes {
            noise = box_blur(&noise, width, height);
        }
        // Blurring shrinks the noise variance; rescale to unit std
        // before applying the requested amplitude.
        let std = (noise.iter().map(|v| v * v).sum::<f64>() / noise.len() as f64).sqrt();
        if std > 0.0 {
            for (f, n) in field.iter_mut().zip(&noise) {
                *f += spec.texture * n / std;
            }
        }
    }

    // Two normalization passes: the first clamp can bend the statistics,
    // the second pass lands close to the target.
    for _ in 0..2 {
        let n = field.len() as f64;
        let mean = field.iter().sum::<f64>() / n;
        let std =
            (field.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n).sqrt();
        if std > 0.0 {
            for v in field.iter_mut() {
                *v = ((*v - mean) / std * spec.target_std + spec.target_mean)
                    .clamp(0.0, 255.0);
            }
        }
    }
    // Quantize to 8-bit levels so the corpus behaves like PGM input.
    for v in field.iter_mut() {
        *v = v.round();
    }
    Image { width, height, pixels: field }
}

fn add_bump(
    field: &mut [f64],
    width: usize,
    height: usize,
    cx: f64,
    cy: f64,
    sigma: f64,
    amp: f64,
) {
    let two_s2 = 2.0 * sigma * sigma;
    for r in 0..height {
        for c in 0..width {
            let dx = c as f64 - cx;
            let dy = r as f64 - cy;
            field[r * width + c] += amp * (-(dx * dx + dy * dy) / two_s2).exp();
        }
    }
}

#[allow(clippy::too_many_arguments)]
fn add_disc(
    field: &mut [f64],
    width: usize,
    height: usize,
    cx: f64,
    cy: f64,
    radius: f64,
    edge: f64,
    amp: f64,
) {
    for r in 0..height {
        for c in 0..width {
            let dx = c as f64 - cx;
            let dy = r as f64 - cy;
            let d = (dx * dx + dy * dy).sqrt();
            field[r * width + c] += amp * 0.5 * (1.0 + ((radius - d) / edge).tanh());
        }
    }
}

fn box_blur(src: &[f64], width: usize, height: usize) -> Vec<f64> {
    let mut out = vec![0.0; src.len()];
    for r in 0..height {
        for c in 0..width {
            let mut sum = 0.0;
            let mut count = 0.0;
            for dr in -1i64..=1 {
                for dc in -1i64..=1 {
                    let rr = r as i64 + dr;
                    let cc = c as i64 + dc;
                    if rr >= 0 && rr < height as i64 && cc >= 0 && cc < width as i64 {
                        sum += src[rr as usize * width + cc as usize];
                        count += 1.0;
                    }
                }
            }
            out[r * width + c] = sum / count;
        }
    }
    out
}
