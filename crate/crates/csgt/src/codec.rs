//! End-to-end encoder and decoder tying the pipeline stages together.
//!
//! Encoding: gray transform, replicate padding, pixel scrambling, block
//! sampling with one seeded Gaussian matrix, then either raw `f32`
//! measurements (lossless) or uniform quantization plus canonical
//! Huffman coding. Decoding regenerates every operator from the header,
//! undoes the gray shift in the measurement domain, and reconstructs.

use crate::basis::SparsityBasis;
use crate::container::{self, Bitstream, Header, RateReport};
use crate::error::{CodecError, Result};
use crate::gray::{self, GrayConstant};
use crate::huffman::{self, HuffmanTable};
use crate::image::Image;
use crate::metrics;
use crate::quantizer::{self, QuantizedBlock, QuantizerConfig};
use crate::rng::PrngId;
use crate::sensing::{self, MeasurementMatrix, Permutation};
use crate::solver::{self, ReconstructionLayout, SolveStats, SolverConfig};

pub const DEFAULT_BLOCK_SIZE: u8 = 32;

#[derive(Debug, Clone, Copy)]
pub struct EncoderConfig {
    /// Measurements per pixel, in (0, 1].
    pub sampling_rate: f64,
    /// Bits per CS sample; `None` stores raw `f32` measurements.
    pub bit_depth: Option<u8>,
    pub block_size: u8,
    pub matrix_seed: u64,
    pub scramble_seed: u64,
    /// Subtract the image mean before sampling. Off reproduces the
    /// plain scrambled baseline.
    pub gray_transform: bool,
}

impl Default for EncoderConfig {
    fn default() -> Self {
        Self {
            sampling_rate: 0.5,
            bit_depth: Some(6),
            block_size: DEFAULT_BLOCK_SIZE,
            matrix_seed: 1,
            scramble_seed: 2,
            gray_transform: true,
        }
    }
}

impl EncoderConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.sampling_rate > 0.0 && self.sampling_rate <= 1.0) {
            return Err(CodecError::InvalidParameter(format!(
                "sampling rate must be in (0, 1], got {}",
                self.sampling_rate
            )));
        }
        if self.block_size == 0 {
            return Err(CodecError::InvalidParameter("block size must be at least 1".into()));
        }
        if let Some(b) = self.bit_depth {
            if !(2..=16).contains(&b) {
                return Err(CodecError::InvalidParameter(format!(
                    "bit depth must be in 2..=16, got {b}"
                )));
            }
        }
        Ok(())
    }

    /// Measurements per block for this sampling rate, at least 1.
    pub fn measurements_per_block(&self) -> u16 {
        let n = u32::from(self.block_size) * u32::from(self.block_size);
        let m = (self.sampling_rate * f64::from(n)).round() as u32;
        m.clamp(1, n) as u16
    }
}

/// Encoder-side numbers the experiments report.
#[derive(Debug, Clone)]
pub struct EncodeReport {
    pub m: u16,
    pub num_blocks: usize,
    pub gray_constant: f32,
    /// Empirical variance pooled over every transmitted measurement.
    pub measurement_variance: f64,
    /// Variance the measurement model predicts (per block, pooled
    /// across scrambled blocks).
    pub predicted_variance: f64,
    /// Entropy of the quantization indices; zero for lossless streams.
    pub index_entropy: f64,
    pub rate: RateReport,
}

fn transformed_scrambled_blocks(
    img: &Image,
    cfg: &EncoderConfig,
    a: GrayConstant,
) -> (Vec<Vec<f64>>, usize, usize) {
    let shifted = gray::forward_transform(img, a);
    let padded = sensing::pad_replicate(&shifted, cfg.block_size as usize);
    let perm = Permutation::generate(cfg.scramble_seed, padded.pixel_count());
    let scrambled = Image {
        width: padded.width,
        height: padded.height,
        pixels: perm.apply(&padded.pixels),
    };
    let blocks = sensing::stack_blocks(&scrambled, cfg.block_size as usize);
    (blocks, padded.width, padded.height)
}

/// Flattened transmitted CS samples for an image, block-major, after
/// the gray shift but before any quantization. This is what the stream
/// carries and what the sample histograms are taken over.
pub fn sample_image(img: &Image, cfg: &EncoderConfig) -> Result<Vec<f64>> {
    cfg.validate()?;
    let a = if cfg.gray_transform {
        gray::optimal_constant(img)
    } else {
        GrayConstant::zero()
    };
    let (blocks, _, _) = transformed_scrambled_blocks(img, cfg, a);
    let m = cfg.measurements_per_block();
    let n = u32::from(cfg.block_size) * u32::from(cfg.block_size);
    let phi = MeasurementMatrix::generate(cfg.matrix_seed, m as usize, n as usize)?;
    let measurements = sensing::sample_all(&phi, &blocks)?;
    Ok(measurements.into_iter().flatten().collect())
}

pub fn encode(img: &Image, cfg: &EncoderConfig) -> Result<(Vec<u8>, EncodeReport)> {
    cfg.validate()?;
    if img.width > u16::MAX as usize || img.height > u16::MAX as usize {
        return Err(CodecError::InvalidParameter(format!(
            "image {}x{} exceeds the container's u16 dimensions",
            img.width, img.height
        )));
    }
    let a = if cfg.gray_transform {
        gray::optimal_constant(img)
    } else {
        GrayConstant::zero()
    };
    let (blocks, _, _) = transformed_scrambled_blocks(img, cfg, a);
    let m = cfg.measurements_per_block();
    let n = u32::from(cfg.block_size) * u32::from(cfg.block_size);
    let phi = MeasurementMatrix::generate(cfg.matrix_seed, m as usize, n as usize)?;
    let measurements = sensing::sample_all(&phi, &blocks)?;

    let all_samples: Vec<f64> = measurements.iter().flatten().copied().collect();
    let measurement_variance = metrics::sample_variance(&all_samples);
    // Scrambling makes each block an even draw of the image's pixels,
    // so the per-block variance law pools to the whole-padded-image
    // energy split evenly across blocks.
    let padded = sensing::pad_replicate(&gray::forward_transform(img, a), cfg.block_size as usize);
    let predicted_variance = padded.pixels.iter().map(|v| v * v).sum::<f64>()
        / (m as f64)
        / blocks.len() as f64;

    let mut header = Header {
        width: img.width as u16,
        height: img.height as u16,
        block_size: cfg.block_size,
        m,
        bit_depth: cfg.bit_depth.unwrap_or(0),
        matrix_seed: cfg.matrix_seed,
        scramble_seed: cfg.scramble_seed,
        prng_id: PrngId::ChaCha20BoxMullerV1,
        gray_constant: a.raw(),
        q_lower: 0.0,
        q_upper: 1.0,
    };

    let (bytes, index_entropy, indices, table) = match cfg.bit_depth {
        None => {
            let mut payload = Vec::with_capacity(all_samples.len() * 4);
            for &v in &all_samples {
                payload.extend_from_slice(&(v as f32).to_le_bytes());
            }
            let bits = payload.len() as u64 * 8;
            let bytes = container::write_bitstream(&header, None, &payload, bits)?;
            (bytes, 0.0, Vec::new(), None)
        }
        Some(b) => {
            let qcfg = quantizer::fit_range(b, &all_samples)?;
            header.q_lower = qcfg.lower_raw();
            header.q_upper = qcfg.upper_raw();
            let q = quantizer::quantize(&all_samples, &qcfg)?;
            let mut counts = vec![0u64; qcfg.levels() as usize];
            for &i in &q.indices {
                counts[i as usize] += 1;
            }
            let table = HuffmanTable::build(&counts)?;
            let (payload, bits) = huffman::encode_indices(&q.indices, &table)?;
            let bytes = container::write_bitstream(&header, Some(&table), &payload, bits)?;
            let entropy = metrics::empirical_entropy(&q.indices);
            (bytes, entropy, q.indices, Some(table))
        }
    };

    let rate = container::measure_rate(bytes.len(), &header, &indices, table.as_ref());
    let report = EncodeReport {
        m,
        num_blocks: blocks.len(),
        gray_constant: a.raw(),
        measurement_variance,
        predicted_variance,
        index_entropy,
        rate,
    };
    Ok((bytes, report))
}

#[derive(Debug, Clone)]
pub struct DecodeReport {
    pub header: Header,
    pub stats: SolveStats,
}

/// Measurement vectors per block with the gray offset restored, plus the
/// solver layout, straight from a parsed stream.
pub fn recovered_measurements(bs: &Bitstream) -> Result<(Vec<Vec<f64>>, ReconstructionLayout)> {
    let header = &bs.header;
    let m = header.m as usize;
    let n = header.block_size as usize * header.block_size as usize;
    let num_blocks = header.num_blocks();

    let shifted: Vec<f64> = if header.is_lossless() {
        bs.payload
            .chunks_exact(4)
            .map(|c| f32::from_le_bytes(c.try_into().unwrap()) as f64)
            .collect()
    } else {
        let table = bs.table.as_ref().ok_or_else(|| {
            CodecError::MalformedBitstream("quantized stream without code table".into())
        })?;
        let indices = huffman::decode_indices(
            &bs.payload,
            bs.payload_bit_count,
            table,
            num_blocks * m,
        )?;
        let qcfg = QuantizerConfig::new(header.bit_depth, header.q_lower, header.q_upper)?;
        quantizer::dequantize(&QuantizedBlock { indices, config: qcfg })?
    };
    if shifted.len() != num_blocks * m {
        return Err(CodecError::DimensionMismatch {
            expected: num_blocks * m,
            got: shifted.len(),
            context: "decoded measurement count",
        });
    }

    let phi = MeasurementMatrix::generate(header.matrix_seed, m, n)?;
    let a = GrayConstant::new(header.gray_constant)?;
    let offset = gray::measurement_offset(&phi, a);
    let measurements: Vec<Vec<f64>> = shifted
        .chunks_exact(m)
        .map(|block| gray::inverse_transform(block, &offset))
        .collect::<Result<_>>()?;

    let layout = ReconstructionLayout {
        source_width: header.width as usize,
        source_height: header.height as usize,
        padded_width: header.padded_width(),
        padded_height: header.padded_height(),
        block_size: header.block_size as usize,
    };
    Ok((measurements, layout))
}

pub fn decode(
    bytes: &[u8],
    basis: SparsityBasis,
    solver_cfg: &SolverConfig,
) -> Result<(Image, DecodeReport)> {
    let bs = container::read_bitstream(bytes)?;
    let (measurements, layout) = recovered_measurements(&bs)?;
    let header = bs.header;

    let m = header.m as usize;
    let n = header.block_size as usize * header.block_size as usize;
    let phi = MeasurementMatrix::generate(header.matrix_seed, m, n)?;
    let perm = Permutation::generate(
        header.scramble_seed,
        layout.padded_width * layout.padded_height,
    );

    let (image, stats) =
        solver::reconstruct(&measurements, &phi, &perm, &layout, basis, solver_cfg)?;
    Ok((image, DecodeReport { header, stats }))
}
