//! Smoothed projected Landweber reconstruction.
//!
//! Each iteration smooths the running estimate with an adaptive Wiener
//! filter, projects it block by block onto the set of images consistent
//! with the measurements, sparsifies it by hard-thresholding detail
//! coefficients, and projects once more. The measurements live in the
//! scrambled pixel order while the smoothing and sparsity priors apply
//! to the natural order, so the estimate crosses the permutation twice
//! per projection.

use rayon::prelude::*;

use crate::basis::SparsityBasis;
use crate::error::{CodecError, Result};
use crate::image::Image;
use crate::sensing::{self, GramSolver, MeasurementMatrix, Permutation};

#[derive(Debug, Clone, Copy)]
pub struct SolverConfig {
    pub max_iterations: usize,
    /// Stop when the relative change of the estimate drops below this.
    pub tolerance: f64,
    /// Initial threshold as a multiple of the detail coefficients'
    /// median absolute deviation.
    pub threshold_scale: f64,
    /// Per-iteration multiplicative threshold decay.
    pub threshold_decay: f64,
    /// Side length of the Wiener smoothing window, odd.
    pub wiener_window: usize,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            max_iterations: 200,
            tolerance: 1e-4,
            threshold_scale: 3.0,
            threshold_decay: 0.97,
            wiener_window: 3,
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        if self.max_iterations == 0 {
            return Err(CodecError::InvalidParameter("max_iterations must be >= 1".into()));
        }
        if self.tolerance <= 0.0 || self.tolerance.is_nan() {
            return Err(CodecError::InvalidParameter("tolerance must be positive".into()));
        }
        if self.threshold_scale < 0.0 || !(0.0..=1.0).contains(&self.threshold_decay) {
            return Err(CodecError::InvalidParameter(
                "threshold schedule out of range".into(),
            ));
        }
        if self.wiener_window.is_multiple_of(2) {
            return Err(CodecError::InvalidParameter(
                "wiener window must be odd".into(),
            ));
        }
        Ok(())
    }
}

/// Shape bookkeeping the solver needs alongside the raw measurements.
#[derive(Debug, Clone, Copy)]
pub struct ReconstructionLayout {
    pub source_width: usize,
    pub source_height: usize,
    pub padded_width: usize,
    pub padded_height: usize,
    pub block_size: usize,
}

impl ReconstructionLayout {
    pub fn num_blocks(&self) -> usize {
        (self.padded_width / self.block_size) * (self.padded_height / self.block_size)
    }
}

#[derive(Debug, Clone)]
pub struct SolveStats {
    pub iterations: usize,
    pub converged: bool,
    /// Measurement inconsistency of the thresholded estimate, one entry
    /// per iteration, taken before the closing projection restores
    /// consistency. This is the quantity the iteration drives down.
    pub residual_history: Vec<f64>,
    /// Iteration whose estimate was returned (lowest residual seen).
    pub best_iteration: usize,
}

/// MATLAB-style adaptive Wiener filter over a square window: estimate
/// local mean and variance, take the mean of the local variances as the
/// noise power, and shrink each pixel toward its local mean.
pub fn wiener_filter(img: &Image, window: usize) -> Image {
    assert!(window % 2 == 1, "window must be odd");
    let half = window as isize / 2;
    let (w, h) = (img.width as isize, img.height as isize);
    let mut means = vec![0.0; img.pixels.len()];
    let mut vars = vec![0.0; img.pixels.len()];
    for r in 0..h {
        for c in 0..w {
            let mut sum = 0.0;
            let mut sum_sq = 0.0;
            let mut count = 0.0;
            for dr in -half..=half {
                for dc in -half..=half {
                    let (rr, cc) = (r + dr, c + dc);
                    if rr >= 0 && rr < h && cc >= 0 && cc < w {
                        let v = img.pixels[(rr * w + cc) as usize];
                        sum += v;
                        sum_sq += v * v;
                        count += 1.0;
                    }
                }
            }
            let mean = sum / count;
            means[(r * w + c) as usize] = mean;
            vars[(r * w + c) as usize] = (sum_sq / count - mean * mean).max(0.0);
        }
    }
    let noise = vars.iter().sum::<f64>() / vars.len() as f64;
    let pixels = img
        .pixels
        .iter()
        .zip(means.iter().zip(&vars))
        .map(|(&x, (&mu, &var))| {
            if var > noise {
                mu + (var - noise) / var * (x - mu)
            } else {
                mu
            }
        })
        .collect();
    Image { width: img.width, height: img.height, pixels }
}

fn median_in_place(values: &mut [f64]) -> f64 {
    if values.is_empty() {
        return 0.0;
    }
    let mid = values.len() / 2;
    let (_, m, _) = values.select_nth_unstable_by(mid, |a, b| a.partial_cmp(b).unwrap());
    *m
}

/// Median absolute deviation about the median.
fn mad(values: &[f64]) -> f64 {
    let mut v = values.to_vec();
    let med = median_in_place(&mut v);
    let mut dev: Vec<f64> = v.iter().map(|x| (x - med).abs()).collect();
    median_in_place(&mut dev)
}

/// Projects each block of the scrambled estimate onto its measurement
/// constraint set: `x_b += Phi^T (Phi Phi^T)^{-1} (y_b - Phi x_b)`.
/// Returns the pre-projection residual norm over all blocks.
fn project_blocks(
    scrambled: &mut Image,
    measurements: &[Vec<f64>],
    phi: &MeasurementMatrix,
    gram: &GramSolver,
    layout: &ReconstructionLayout,
) -> f64 {
    let mut blocks = sensing::stack_blocks(scrambled, layout.block_size);
    let residual_sq: f64 = blocks
        .par_iter_mut()
        .zip(measurements.par_iter())
        .map(|(block, y)| {
            let yx = phi.sample_block(block).expect("layout-checked shapes");
            let r: Vec<f64> = y.iter().zip(&yx).map(|(a, b)| a - b).collect();
            let z = gram.solve(&r).expect("layout-checked shapes");
            let corr = phi.adjoint(&z).expect("layout-checked shapes");
            for (x, c) in block.iter_mut().zip(&corr) {
                *x += c;
            }
            sensing::dot(&r, &r)
        })
        .sum();
    *scrambled = sensing::unstack_blocks(
        &blocks,
        layout.padded_width,
        layout.padded_height,
        layout.block_size,
    );
    residual_sq.sqrt()
}

fn relative_change(next: &[f64], prev: &[f64]) -> f64 {
    let mut diff = 0.0;
    let mut base = 0.0;
    for (a, b) in next.iter().zip(prev) {
        diff += (a - b) * (a - b);
        base += b * b;
    }
    (diff / base.max(1.0)).sqrt()
}

/// Recovers the image from per-block measurements of its scrambled,
/// padded pixels. Returns the natural-order image cropped to the source
/// size and clamped to display range, plus iteration statistics.
pub fn reconstruct(
    measurements: &[Vec<f64>],
    phi: &MeasurementMatrix,
    perm: &Permutation,
    layout: &ReconstructionLayout,
    basis: SparsityBasis,
    cfg: &SolverConfig,
) -> Result<(Image, SolveStats)> {
    cfg.validate()?;
    if measurements.len() != layout.num_blocks() {
        return Err(CodecError::DimensionMismatch {
            expected: layout.num_blocks(),
            got: measurements.len(),
            context: "measurement vectors vs block count",
        });
    }
    for y in measurements {
        if y.len() != phi.rows {
            return Err(CodecError::DimensionMismatch {
                expected: phi.rows,
                got: y.len(),
                context: "measurement length vs matrix rows",
            });
        }
    }
    let padded_pixels = layout.padded_width * layout.padded_height;
    if perm.len() != padded_pixels {
        return Err(CodecError::DimensionMismatch {
            expected: padded_pixels,
            got: perm.len(),
            context: "permutation length vs padded pixels",
        });
    }

    let gram = GramSolver::new(phi)?;
    let mut natural = Image {
        width: layout.padded_width,
        height: layout.padded_height,
        pixels: vec![0.0; padded_pixels],
    };
    let project = |img: &mut Image| -> f64 {
        let mut scrambled = Image {
            width: layout.padded_width,
            height: layout.padded_height,
            pixels: perm.apply(&img.pixels),
        };
        let res = project_blocks(&mut scrambled, measurements, phi, &gram, layout);
        img.pixels = perm.invert(&scrambled.pixels);
        res
    };

    let mut lambda = 0.0;
    let mut residual_history = Vec::new();
    let mut best: Option<(f64, usize, Vec<f64>)> = None;
    let mut converged = false;
    let mut iterations = 0;
    let mut quiet_steps = 0;

    for iter in 0..cfg.max_iterations {
        iterations = iter + 1;
        let previous = natural.pixels.clone();

        natural = wiener_filter(&natural, cfg.wiener_window);
        project(&mut natural);

        let mut coeffs = basis.forward(&natural)?;
        if iter == 0 {
            lambda = cfg.threshold_scale * mad(&coeffs.detail_magnitudes());
        }
        coeffs.hard_threshold_details(lambda);
        natural = basis.inverse(&coeffs);
        lambda *= cfg.threshold_decay;

        let res = project(&mut natural);
        residual_history.push(res);
        if best.as_ref().is_none_or(|(b, _, _)| res < *b) {
            best = Some((res, iter, natural.pixels.clone()));
        }

        // A single sub-tolerance step can be a transient plateau while
        // the threshold is still shrinking the active coefficient set;
        // only a sustained lull counts as convergence.
        if relative_change(&natural.pixels, &previous) < cfg.tolerance {
            quiet_steps += 1;
            if quiet_steps >= 3 {
                converged = true;
                break;
            }
        } else {
            quiet_steps = 0;
        }
    }

    let (_, best_iteration, best_pixels) = best.expect("at least one iteration ran");
    let mut out = Vec::with_capacity(layout.source_width * layout.source_height);
    for r in 0..layout.source_height {
        for c in 0..layout.source_width {
            out.push(best_pixels[r * layout.padded_width + c].clamp(0.0, 255.0));
        }
    }
    Ok((
        Image {
            width: layout.source_width,
            height: layout.source_height,
            pixels: out,
        },
        SolveStats { iterations, converged, residual_history, best_iteration },
    ))
}
