//! Measurement matrix generation, pixel scrambling, block partitioning,
//! and block sampling.

use rayon::prelude::*;

use crate::error::{CodecError, Result};
use crate::image::Image;
use crate::rng::SeededRng;

/// Seeded Gaussian measurement matrix with per-entry variance `1/rows`.
///
/// Entries are generated row-major from the seed, so the matrix can be
/// regenerated bit-identically at the decoder.
#[derive(Debug, Clone)]
pub struct MeasurementMatrix {
    pub rows: usize,
    pub cols: usize,
    pub seed: u64,
    data: Vec<f64>,
}

impl MeasurementMatrix {
    /// Draws a deterministic `rows x cols` matrix with i.i.d. `N(0, 1/rows)`
    /// entries.
    pub fn generate(seed: u64, rows: usize, cols: usize) -> Result<Self> {
        if rows == 0 || cols == 0 {
            return Err(CodecError::InvalidParameter(format!(
                "measurement matrix must be non-empty, got {rows}x{cols}"
            )));
        }
        let mut rng = SeededRng::new(seed);
        let scale = 1.0 / (rows as f64).sqrt();
        let data = (0..rows * cols).map(|_| rng.next_gaussian() * scale).collect();
        Ok(Self { rows, cols, seed, data })
    }

    /// More rows than columns means the block is oversampled; callers
    /// should surface a warning but the matrix is still usable.
    pub fn is_oversampled(&self) -> bool {
        self.rows > self.cols
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn entries(&self) -> &[f64] {
        &self.data
    }

    /// `y = Phi x` for one column-stacked block.
    pub fn sample_block(&self, block: &[f64]) -> Result<Vec<f64>> {
        if block.len() != self.cols {
            return Err(CodecError::DimensionMismatch {
                expected: self.cols,
                got: block.len(),
                context: "block length vs matrix columns",
            });
        }
        Ok((0..self.rows).map(|i| dot(self.row(i), block)).collect())
    }

    /// `Phi^T r`, the adjoint applied to a measurement residual.
    pub fn adjoint(&self, residual: &[f64]) -> Result<Vec<f64>> {
        if residual.len() != self.rows {
            return Err(CodecError::DimensionMismatch {
                expected: self.rows,
                got: residual.len(),
                context: "residual length vs matrix rows",
            });
        }
        let mut out = vec![0.0; self.cols];
        for (i, &r) in residual.iter().enumerate() {
            for (o, &a) in out.iter_mut().zip(self.row(i)) {
                *o += r * a;
            }
        }
        Ok(out)
    }

    /// Per-row sums, used to regenerate the constant-vector measurement.
    pub fn row_sums(&self) -> Vec<f64> {
        (0..self.rows).map(|i| self.row(i).iter().sum()).collect()
    }

    /// Largest squared singular value, estimated by power iteration on
    /// `Phi^T Phi` from a deterministic start vector.
    pub fn spectral_norm_sq(&self, iterations: usize) -> f64 {
        let mut v = vec![1.0 / (self.cols as f64).sqrt(); self.cols];
        let mut sigma_sq = 1.0;
        for _ in 0..iterations {
            let av = self.sample_block(&v).expect("internal shape");
            let atav = self.adjoint(&av).expect("internal shape");
            let norm = dot(&atav, &atav).sqrt();
            if norm == 0.0 {
                return 1.0;
            }
            sigma_sq = dot(&v, &atav);
            for (x, &y) in v.iter_mut().zip(&atav) {
                *x = y / norm;
            }
        }
        sigma_sq
    }
}

/// Cholesky factorization of the Gram matrix `Phi Phi^T`, giving the
/// exact projection onto `{x : Phi x = y}` that the solver's Landweber
/// step uses. For an i.i.d. Gaussian matrix with rows <= cols the Gram
/// matrix is almost surely positive definite.
#[derive(Debug, Clone)]
pub struct GramSolver {
    /// Lower-triangular factor, row-major m x m.
    l: Vec<f64>,
    m: usize,
}

impl GramSolver {
    pub fn new(phi: &MeasurementMatrix) -> Result<Self> {
        let m = phi.rows;
        let mut g = vec![0.0; m * m];
        for i in 0..m {
            for j in 0..=i {
                let v = dot(phi.row(i), phi.row(j));
                g[i * m + j] = v;
                g[j * m + i] = v;
            }
        }
        // In-place Cholesky on the lower triangle.
        let mut l = g;
        for i in 0..m {
            for j in 0..=i {
                let mut sum = l[i * m + j];
                for k in 0..j {
                    sum -= l[i * m + k] * l[j * m + k];
                }
                if i == j {
                    if sum <= 0.0 {
                        return Err(CodecError::InvalidParameter(format!(
                            "gram matrix not positive definite at pivot {i}"
                        )));
                    }
                    l[i * m + i] = sum.sqrt();
                } else {
                    l[i * m + j] = sum / l[j * m + j];
                }
            }
            for j in i + 1..m {
                l[i * m + j] = 0.0;
            }
        }
        Ok(Self { l, m })
    }

    /// Solves `(Phi Phi^T) z = rhs` by forward and back substitution.
    pub fn solve(&self, rhs: &[f64]) -> Result<Vec<f64>> {
        if rhs.len() != self.m {
            return Err(CodecError::DimensionMismatch {
                expected: self.m,
                got: rhs.len(),
                context: "gram solve right-hand side",
            });
        }
        let m = self.m;
        let mut z = rhs.to_vec();
        for i in 0..m {
            let mut sum = z[i];
            let row = &self.l[i * m..i * m + i];
            for (&l_ik, &z_k) in row.iter().zip(&z) {
                sum -= l_ik * z_k;
            }
            z[i] = sum / self.l[i * m + i];
        }
        for i in (0..m).rev() {
            let mut sum = z[i];
            for (k, &z_k) in z.iter().enumerate().skip(i + 1) {
                sum -= self.l[k * m + i] * z_k;
            }
            z[i] = sum / self.l[i * m + i];
        }
        Ok(z)
    }
}

/// Four-way accumulation so the dot product vectorizes; the solver spends
/// nearly all of its time here.
pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    let mut acc = [0.0f64; 4];
    let chunks = a.len() / 4;
    for k in 0..chunks {
        let i = k * 4;
        acc[0] += a[i] * b[i];
        acc[1] += a[i + 1] * b[i + 1];
        acc[2] += a[i + 2] * b[i + 2];
        acc[3] += a[i + 3] * b[i + 3];
    }
    let mut tail = 0.0;
    for i in chunks * 4..a.len() {
        tail += a[i] * b[i];
    }
    acc[0] + acc[1] + acc[2] + acc[3] + tail
}

/// Seeded Fisher-Yates permutation of pixel indices.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Permutation {
    /// `forward[i]` is the source index of scrambled position `i`.
    forward: Vec<u32>,
}

impl Permutation {
    pub fn generate(seed: u64, len: usize) -> Self {
        let mut forward: Vec<u32> = (0..len as u32).collect();
        let mut rng = SeededRng::new(seed);
        for i in (1..len).rev() {
            forward.swap(i, rng.next_index(i + 1));
        }
        Self { forward }
    }

    pub fn identity(len: usize) -> Self {
        Self { forward: (0..len as u32).collect() }
    }

    pub fn len(&self) -> usize {
        self.forward.len()
    }

    pub fn is_empty(&self) -> bool {
        self.forward.is_empty()
    }

    pub fn apply(&self, values: &[f64]) -> Vec<f64> {
        assert_eq!(values.len(), self.forward.len());
        self.forward.iter().map(|&src| values[src as usize]).collect()
    }

    pub fn invert(&self, values: &[f64]) -> Vec<f64> {
        assert_eq!(values.len(), self.forward.len());
        let mut out = vec![0.0; values.len()];
        for (i, &src) in self.forward.iter().enumerate() {
            out[src as usize] = values[i];
        }
        out
    }
}

/// Scrambles pixels with a seeded uniform permutation.
pub fn scramble(img: &Image, seed: u64) -> (Image, Permutation) {
    let perm = Permutation::generate(seed, img.pixel_count());
    let scrambled = Image {
        width: img.width,
        height: img.height,
        pixels: perm.apply(&img.pixels),
    };
    (scrambled, perm)
}

pub fn unscramble(img: &Image, perm: &Permutation) -> Image {
    Image {
        width: img.width,
        height: img.height,
        pixels: perm.invert(&img.pixels),
    }
}

/// Replicates the last row/column out to multiples of `block_size`.
pub fn pad_replicate(img: &Image, block_size: usize) -> Image {
    let pw = img.width.div_ceil(block_size) * block_size;
    let ph = img.height.div_ceil(block_size) * block_size;
    if pw == img.width && ph == img.height {
        return img.clone();
    }
    let mut pixels = Vec::with_capacity(pw * ph);
    for r in 0..ph {
        let src_r = r.min(img.height - 1);
        for c in 0..pw {
            pixels.push(img.get(src_r, c.min(img.width - 1)));
        }
    }
    Image { width: pw, height: ph, pixels }
}

/// Splits a padded image into column-stacked `block_size^2` vectors.
/// Blocks are ordered row-major over the block grid; within a block,
/// pixels are stacked column by column.
pub fn stack_blocks(img: &Image, block_size: usize) -> Vec<Vec<f64>> {
    assert_eq!(img.width % block_size, 0);
    assert_eq!(img.height % block_size, 0);
    let bw = img.width / block_size;
    let bh = img.height / block_size;
    let mut blocks = Vec::with_capacity(bw * bh);
    for by in 0..bh {
        for bx in 0..bw {
            let mut block = Vec::with_capacity(block_size * block_size);
            for col in 0..block_size {
                for row in 0..block_size {
                    block.push(img.get(by * block_size + row, bx * block_size + col));
                }
            }
            blocks.push(block);
        }
    }
    blocks
}

/// Inverse of [`stack_blocks`]: reassembles a padded image.
pub fn unstack_blocks(
    blocks: &[Vec<f64>],
    padded_width: usize,
    padded_height: usize,
    block_size: usize,
) -> Image {
    let bw = padded_width / block_size;
    let mut pixels = vec![0.0; padded_width * padded_height];
    for (b, block) in blocks.iter().enumerate() {
        let by = b / bw;
        let bx = b % bw;
        for col in 0..block_size {
            for row in 0..block_size {
                pixels[(by * block_size + row) * padded_width + bx * block_size + col] =
                    block[col * block_size + row];
            }
        }
    }
    Image { width: padded_width, height: padded_height, pixels }
}

/// Image partitioned into column-stacked blocks, padding included.
#[derive(Debug, Clone)]
pub struct BlockPartition {
    pub block_size: usize,
    pub source_width: usize,
    pub source_height: usize,
    pub padded_width: usize,
    pub padded_height: usize,
    pub blocks: Vec<Vec<f64>>,
}

impl BlockPartition {
    pub fn num_blocks(&self) -> usize {
        self.blocks.len()
    }
}

/// Pads with edge replication and splits into blocks.
pub fn partition(img: &Image, block_size: usize) -> Result<BlockPartition> {
    if block_size == 0 {
        return Err(CodecError::InvalidParameter("block size must be at least 1".into()));
    }
    let padded = pad_replicate(img, block_size);
    let blocks = stack_blocks(&padded, block_size);
    Ok(BlockPartition {
        block_size,
        source_width: img.width,
        source_height: img.height,
        padded_width: padded.width,
        padded_height: padded.height,
        blocks,
    })
}

/// Samples every block with the same matrix. Blocks are independent, so
/// the map runs data-parallel.
pub fn sample_all(matrix: &MeasurementMatrix, blocks: &[Vec<f64>]) -> Result<Vec<Vec<f64>>> {
    blocks.par_iter().map(|b| matrix.sample_block(b)).collect()
}
