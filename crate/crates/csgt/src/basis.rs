//! Orthonormal sparsity bases for the reconstruction prior: a separable
//! 4-tap orthogonal wavelet over the full image and a block DCT.

use crate::error::{CodecError, Result};
use crate::image::Image;

/// Daubechies 4-tap analysis low-pass filter, unit l2 norm.
fn db4_lo() -> [f64; 4] {
    let s3 = 3.0f64.sqrt();
    let norm = 4.0 * 2.0f64.sqrt();
    [(1.0 + s3) / norm, (3.0 + s3) / norm, (3.0 - s3) / norm, (1.0 - s3) / norm]
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SparsityBasis {
    /// Full-image separable wavelet with periodic boundaries and the
    /// given number of decomposition levels (clamped to what the image
    /// dimensions divide into).
    Wavelet { levels: usize },
    /// Orthonormal DCT-II applied to fixed tiles.
    BlockDct { tile: usize },
}

impl SparsityBasis {
    pub fn wavelet() -> Self {
        Self::Wavelet { levels: 4 }
    }

    pub fn block_dct() -> Self {
        Self::BlockDct { tile: 32 }
    }

    fn usable_levels(&self, width: usize, height: usize) -> usize {
        match *self {
            Self::Wavelet { levels } => {
                let mut usable = 0;
                let (mut w, mut h) = (width, height);
                while usable < levels && w % 2 == 0 && h % 2 == 0 && w >= 4 && h >= 4 {
                    w /= 2;
                    h /= 2;
                    usable += 1;
                }
                usable
            }
            Self::BlockDct { .. } => 0,
        }
    }

    pub fn forward(&self, img: &Image) -> Result<Coefficients> {
        match *self {
            Self::Wavelet { .. } => {
                let levels = self.usable_levels(img.width, img.height);
                if levels == 0 {
                    return Err(CodecError::InvalidParameter(format!(
                        "image {}x{} too small or odd for a wavelet level",
                        img.width, img.height
                    )));
                }
                let mut data = img.pixels.clone();
                let (mut w, mut h) = (img.width, img.height);
                for _ in 0..levels {
                    dwt2_level(&mut data, img.width, w, h);
                    w /= 2;
                    h /= 2;
                }
                Ok(Coefficients {
                    basis: *self,
                    width: img.width,
                    height: img.height,
                    levels,
                    data,
                })
            }
            Self::BlockDct { tile } => {
                if !img.width.is_multiple_of(tile) || !img.height.is_multiple_of(tile) {
                    return Err(CodecError::InvalidParameter(format!(
                        "image {}x{} is not tiled by {tile}",
                        img.width, img.height
                    )));
                }
                let mut data = img.pixels.clone();
                dct2_tiles(&mut data, img.width, img.height, tile, false);
                Ok(Coefficients {
                    basis: *self,
                    width: img.width,
                    height: img.height,
                    levels: 0,
                    data,
                })
            }
        }
    }

    pub fn inverse(&self, coeffs: &Coefficients) -> Image {
        let mut data = coeffs.data.clone();
        match *self {
            Self::Wavelet { .. } => {
                for level in (0..coeffs.levels).rev() {
                    let w = coeffs.width >> level;
                    let h = coeffs.height >> level;
                    idwt2_level(&mut data, coeffs.width, w, h);
                }
            }
            Self::BlockDct { tile } => {
                dct2_tiles(&mut data, coeffs.width, coeffs.height, tile, true);
            }
        }
        Image { width: coeffs.width, height: coeffs.height, pixels: data }
    }
}

/// Transform coefficients in place: for the wavelet, the standard nested
/// quadrant layout; for the DCT, per-tile coefficient grids.
#[derive(Debug, Clone)]
pub struct Coefficients {
    pub basis: SparsityBasis,
    pub width: usize,
    pub height: usize,
    levels: usize,
    pub data: Vec<f64>,
}

impl Coefficients {
    /// True for positions carrying fine-scale information: everything
    /// outside the coarsest approximation quadrant (wavelet), or
    /// everything but each tile's DC coefficient (DCT). Thresholding
    /// only touches these.
    pub fn is_detail(&self, row: usize, col: usize) -> bool {
        match self.basis {
            SparsityBasis::Wavelet { .. } => {
                row >= self.height >> self.levels || col >= self.width >> self.levels
            }
            SparsityBasis::BlockDct { tile } => !row.is_multiple_of(tile) || !col.is_multiple_of(tile),
        }
    }

    pub fn detail_magnitudes(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.data.len());
        for row in 0..self.height {
            for col in 0..self.width {
                if self.is_detail(row, col) {
                    out.push(self.data[row * self.width + col].abs());
                }
            }
        }
        out
    }

    /// Zeroes detail coefficients with magnitude at or below `lambda`.
    pub fn hard_threshold_details(&mut self, lambda: f64) {
        for row in 0..self.height {
            for col in 0..self.width {
                let i = row * self.width + col;
                if self.is_detail(row, col) && self.data[i].abs() <= lambda {
                    self.data[i] = 0.0;
                }
            }
        }
    }
}

/// One 2D analysis level on the top-left `w x h` region: filter rows,
/// then columns, writing approximations to the first half and details to
/// the second. Periodic boundary handling keeps the transform orthonormal.
fn dwt2_level(data: &mut [f64], stride: usize, w: usize, h: usize) {
    let mut line = vec![0.0; w.max(h)];
    let mut out = vec![0.0; w.max(h)];
    for r in 0..h {
        line[..w].copy_from_slice(&data[r * stride..r * stride + w]);
        dwt_line(&line[..w], &mut out[..w]);
        data[r * stride..r * stride + w].copy_from_slice(&out[..w]);
    }
    for c in 0..w {
        for r in 0..h {
            line[r] = data[r * stride + c];
        }
        dwt_line(&line[..h], &mut out[..h]);
        for r in 0..h {
            data[r * stride + c] = out[r];
        }
    }
}

fn idwt2_level(data: &mut [f64], stride: usize, w: usize, h: usize) {
    let mut line = vec![0.0; w.max(h)];
    let mut out = vec![0.0; w.max(h)];
    for c in 0..w {
        for r in 0..h {
            line[r] = data[r * stride + c];
        }
        idwt_line(&line[..h], &mut out[..h]);
        for r in 0..h {
            data[r * stride + c] = out[r];
        }
    }
    for r in 0..h {
        line[..w].copy_from_slice(&data[r * stride..r * stride + w]);
        idwt_line(&line[..w], &mut out[..w]);
        data[r * stride..r * stride + w].copy_from_slice(&out[..w]);
    }
}

/// Periodic analysis step: `out` holds n/2 approximation then n/2 detail
/// coefficients. The high-pass filter is the quadrature mirror of
/// `DB4_LO`.
fn dwt_line(input: &[f64], out: &mut [f64]) {
    let filter = db4_lo();
    let n = input.len();
    let half = n / 2;
    for k in 0..half {
        let mut lo = 0.0;
        let mut hi = 0.0;
        for (t, &f) in filter.iter().enumerate() {
            let x = input[(2 * k + t) % n];
            lo += f * x;
            hi += filter[3 - t] * if t % 2 == 0 { -x } else { x };
        }
        out[k] = lo;
        out[half + k] = hi;
    }
}

/// Transpose of [`dwt_line`]; for an orthonormal filter bank the
/// transpose is the inverse.
fn idwt_line(input: &[f64], out: &mut [f64]) {
    let filter = db4_lo();
    let n = input.len();
    let half = n / 2;
    out[..n].fill(0.0);
    for k in 0..half {
        let lo = input[k];
        let hi = input[half + k];
        for (t, &f) in filter.iter().enumerate() {
            let g = filter[3 - t] * if t % 2 == 0 { -1.0 } else { 1.0 };
            out[(2 * k + t) % n] += f * lo + g * hi;
        }
    }
}

/// Orthonormal DCT-II (or its inverse) on every `tile x tile` tile,
/// separably: rows then columns.
fn dct2_tiles(data: &mut [f64], width: usize, height: usize, tile: usize, inverse: bool) {
    let table = dct_table(tile);
    let mut line = vec![0.0; tile];
    for ty in (0..height).step_by(tile) {
        for tx in (0..width).step_by(tile) {
            for r in 0..tile {
                let row = &mut data[(ty + r) * width + tx..(ty + r) * width + tx + tile];
                line.copy_from_slice(row);
                dct_line(&line, row, &table, inverse);
            }
            for c in 0..tile {
                for r in 0..tile {
                    line[r] = data[(ty + r) * width + tx + c];
                }
                let mut out = vec![0.0; tile];
                dct_line(&line, &mut out, &table, inverse);
                for r in 0..tile {
                    data[(ty + r) * width + tx + c] = out[r];
                }
            }
        }
    }
}

/// Row k of the table is the k-th orthonormal DCT-II basis vector.
fn dct_table(n: usize) -> Vec<f64> {
    let mut t = vec![0.0; n * n];
    for k in 0..n {
        let scale = if k == 0 { (1.0 / n as f64).sqrt() } else { (2.0 / n as f64).sqrt() };
        for j in 0..n {
            t[k * n + j] = scale
                * (std::f64::consts::PI * (j as f64 + 0.5) * k as f64 / n as f64).cos();
        }
    }
    t
}

fn dct_line(input: &[f64], out: &mut [f64], table: &[f64], inverse: bool) {
    let n = input.len();
    for k in 0..n {
        let mut acc = 0.0;
        for j in 0..n {
            // The matrix is orthogonal, so the inverse is the transpose.
            let w = if inverse { table[j * n + k] } else { table[k * n + j] };
            acc += w * input[j];
        }
        out[k] = acc;
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::SeededRng;

    fn random_image(seed: u64, w: usize, h: usize) -> Image {
        let mut rng = SeededRng::new(seed);
        let pixels = (0..w * h).map(|_| rng.next_f64() * 255.0).collect();
        Image::new(w, h, pixels).unwrap()
    }

    fn l2(v: &[f64]) -> f64 {
        v.iter().map(|x| x * x).sum::<f64>().sqrt()
    }

    #[test]
    fn db4_filter_is_orthonormal() {
        let f = db4_lo();
        let norm: f64 = f.iter().map(|f| f * f).sum();
        assert!((norm - 1.0).abs() < 1e-14);
        // Shift-by-two orthogonality.
        let shifted = f[0] * f[2] + f[1] * f[3];
        assert!(shifted.abs() < 1e-14);
        // Low-pass sums to sqrt(2).
        let sum: f64 = f.iter().sum();
        assert!((sum - std::f64::consts::SQRT_2).abs() < 1e-12);
    }

    #[test]
    fn wavelet_inverse_recovers_image() {
        for (w, h) in [(64, 64), (96, 32), (128, 128)] {
            let img = random_image(1, w, h);
            let basis = SparsityBasis::wavelet();
            let coeffs = basis.forward(&img).unwrap();
            let back = basis.inverse(&coeffs);
            let err = img
                .pixels
                .iter()
                .zip(&back.pixels)
                .map(|(a, b)| (a - b).abs())
                .fold(0.0f64, f64::max);
            assert!(err < 1e-8, "{w}x{h}: max error {err}");
        }
    }

    #[test]
    fn wavelet_preserves_energy() {
        let img = random_image(2, 64, 64);
        let coeffs = SparsityBasis::wavelet().forward(&img).unwrap();
        let rel = (l2(&coeffs.data) - l2(&img.pixels)).abs() / l2(&img.pixels);
        assert!(rel < 1e-10, "energy drift {rel}");
    }

    #[test]
    fn wavelet_level_count_clamps_to_dimensions() {
        // 96 fits the full request; 24 halves to the odd 3 after three
        // levels; 8 runs out of room after two.
        let basis = SparsityBasis::wavelet();
        assert_eq!(basis.usable_levels(96, 96), 4);
        assert_eq!(basis.usable_levels(24, 24), 3);
        assert_eq!(basis.usable_levels(8, 8), 2);
    }

    #[test]
    fn wavelet_rejects_odd_dimensions() {
        let img = random_image(3, 33, 32);
        assert!(SparsityBasis::wavelet().forward(&img).is_err());
    }

    #[test]
    fn constant_image_concentrates_in_approximation() {
        let img = Image::constant(64, 64, 100.0);
        let coeffs = SparsityBasis::wavelet().forward(&img).unwrap();
        let details = coeffs.detail_magnitudes();
        assert!(details.iter().all(|&d| d < 1e-9), "constant image has detail energy");
    }

    #[test]
    fn dct_inverse_recovers_image() {
        let img = random_image(4, 64, 96);
        let basis = SparsityBasis::block_dct();
        let coeffs = basis.forward(&img).unwrap();
        let back = basis.inverse(&coeffs);
        let err = img
            .pixels
            .iter()
            .zip(&back.pixels)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0f64, f64::max);
        assert!(err < 1e-8, "max error {err}");
    }

    #[test]
    fn dct_preserves_energy() {
        let img = random_image(5, 64, 64);
        let coeffs = SparsityBasis::block_dct().forward(&img).unwrap();
        let rel = (l2(&coeffs.data) - l2(&img.pixels)).abs() / l2(&img.pixels);
        assert!(rel < 1e-10, "energy drift {rel}");
    }

    #[test]
    fn dct_rejects_untiled_dimensions() {
        let img = random_image(6, 48, 64);
        assert!(SparsityBasis::block_dct().forward(&img).is_err());
    }

    #[test]
    fn dct_dc_of_constant_tile() {
        // Constant 100 over a 32x32 tile: DC = 100 * 32, details zero.
        let img = Image::constant(32, 32, 100.0);
        let coeffs = SparsityBasis::block_dct().forward(&img).unwrap();
        assert!((coeffs.data[0] - 3200.0).abs() < 1e-9);
        assert!(coeffs.data[1..].iter().all(|&d| d.abs() < 1e-9));
    }

    #[test]
    fn threshold_zeroes_small_details_only() {
        let img = random_image(7, 64, 64);
        let basis = SparsityBasis::wavelet();
        let mut coeffs = basis.forward(&img).unwrap();
        let approx_before: Vec<f64> = (0..coeffs.height)
            .flat_map(|r| {
                let c2 = coeffs.clone();
                (0..coeffs.width).filter_map(move |c| {
                    if c2.is_detail(r, c) {
                        None
                    } else {
                        Some(c2.data[r * c2.width + c])
                    }
                })
            })
            .collect();
        coeffs.hard_threshold_details(f64::INFINITY);
        assert!(coeffs.detail_magnitudes().iter().all(|&d| d == 0.0));
        let approx_after: Vec<f64> = (0..coeffs.height)
            .flat_map(|r| {
                let c2 = coeffs.clone();
                (0..coeffs.width).filter_map(move |c| {
                    if c2.is_detail(r, c) {
                        None
                    } else {
                        Some(c2.data[r * c2.width + c])
                    }
                })
            })
            .collect();
        assert_eq!(approx_before, approx_after);
    }

    #[test]
    fn smooth_image_is_sparse_in_wavelet_domain() {
        // A smooth ramp should compress: most detail coefficients tiny.
        let w = 64;
        let pixels: Vec<f64> = (0..w * w)
            .map(|i| {
                let r = (i / w) as f64 / w as f64;
                let c = (i % w) as f64 / w as f64;
                100.0 + 50.0 * r + 30.0 * c
            })
            .collect();
        let img = Image::new(w, w, pixels).unwrap();
        let coeffs = SparsityBasis::wavelet().forward(&img).unwrap();
        let details = coeffs.detail_magnitudes();
        let tiny = details.iter().filter(|&&d| d < 1e-6).count();
        assert!(
            tiny as f64 / details.len() as f64 > 0.5,
            "only {tiny}/{} details are negligible",
            details.len()
        );
    }
}
