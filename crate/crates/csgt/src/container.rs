//! The `.csgt` container: a fixed little-endian header that fully
//! determines decoder state, an optional code-length table, the packed
//! payload, and a trailing bit count.

use crate::error::{CodecError, Result};
use crate::huffman::HuffmanTable;
use crate::rng::PrngId;

pub const MAGIC: [u8; 4] = *b"CSGT";
pub const VERSION: u8 = 1;
/// magic + version + width + height + block_size + m + bit_depth
/// + matrix_seed + scramble_seed + prng_id + gray_constant + q_lower
/// + q_upper.
pub const HEADER_LEN: usize = 4 + 1 + 2 + 2 + 1 + 2 + 1 + 8 + 8 + 1 + 4 + 4 + 4;
const TRAILER_LEN: usize = 4;

/// Everything the decoder needs to rebuild the matrix, permutation,
/// gray offset, and quantizer. `bit_depth` zero means the payload holds
/// raw little-endian `f32` measurements instead of Huffman codes.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Header {
    pub width: u16,
    pub height: u16,
    pub block_size: u8,
    pub m: u16,
    pub bit_depth: u8,
    pub matrix_seed: u64,
    pub scramble_seed: u64,
    pub prng_id: PrngId,
    pub gray_constant: f32,
    pub q_lower: f32,
    pub q_upper: f32,
}

impl Header {
    pub fn validate(&self) -> Result<()> {
        if self.width == 0 || self.height == 0 {
            return Err(CodecError::InconsistentHeader("zero image dimension".into()));
        }
        if self.block_size == 0 {
            return Err(CodecError::InconsistentHeader("zero block size".into()));
        }
        let n = u32::from(self.block_size) * u32::from(self.block_size);
        if self.m == 0 || u32::from(self.m) > n {
            return Err(CodecError::InconsistentHeader(format!(
                "m = {} outside 1..={n}",
                self.m
            )));
        }
        if self.bit_depth > 16 {
            return Err(CodecError::InconsistentHeader(format!(
                "bit depth {} exceeds 16",
                self.bit_depth
            )));
        }
        if !self.gray_constant.is_finite() {
            return Err(CodecError::InconsistentHeader("non-finite gray constant".into()));
        }
        if self.bit_depth >= 1
            && (!self.q_lower.is_finite()
                || !self.q_upper.is_finite()
                || self.q_lower >= self.q_upper)
        {
            return Err(CodecError::InconsistentHeader(format!(
                "quantizer range [{}, {}] is not a proper interval",
                self.q_lower, self.q_upper
            )));
        }
        Ok(())
    }

    pub fn padded_width(&self) -> usize {
        let b = self.block_size as usize;
        (self.width as usize).div_ceil(b) * b
    }

    pub fn padded_height(&self) -> usize {
        let b = self.block_size as usize;
        (self.height as usize).div_ceil(b) * b
    }

    pub fn num_blocks(&self) -> usize {
        (self.padded_width() / self.block_size as usize)
            * (self.padded_height() / self.block_size as usize)
    }

    /// Total measurements in the stream.
    pub fn measurement_count(&self) -> usize {
        self.num_blocks() * self.m as usize
    }

    pub fn is_lossless(&self) -> bool {
        self.bit_depth == 0
    }

    fn write(&self, out: &mut Vec<u8>) {
        out.extend_from_slice(&MAGIC);
        out.push(VERSION);
        out.extend_from_slice(&self.width.to_le_bytes());
        out.extend_from_slice(&self.height.to_le_bytes());
        out.push(self.block_size);
        out.extend_from_slice(&self.m.to_le_bytes());
        out.push(self.bit_depth);
        out.extend_from_slice(&self.matrix_seed.to_le_bytes());
        out.extend_from_slice(&self.scramble_seed.to_le_bytes());
        out.push(self.prng_id as u8);
        out.extend_from_slice(&self.gray_constant.to_le_bytes());
        out.extend_from_slice(&self.q_lower.to_le_bytes());
        out.extend_from_slice(&self.q_upper.to_le_bytes());
    }
}

/// Parsed container: header, optional table, payload, and the exact
/// number of meaningful payload bits.
#[derive(Debug, Clone)]
pub struct Bitstream {
    pub header: Header,
    pub table: Option<HuffmanTable>,
    pub payload: Vec<u8>,
    pub payload_bit_count: u64,
}

/// Serializes header, table (quantized streams only), payload, and the
/// trailing bit count.
pub fn write_bitstream(
    header: &Header,
    table: Option<&HuffmanTable>,
    payload: &[u8],
    payload_bit_count: u64,
) -> Result<Vec<u8>> {
    header.validate()?;
    if payload_bit_count > u64::from(u32::MAX) {
        return Err(CodecError::InvalidParameter(format!(
            "payload of {payload_bit_count} bits overflows the 32-bit trailer"
        )));
    }
    match (header.is_lossless(), table) {
        (false, None) => {
            return Err(CodecError::InvalidParameter(
                "quantized stream needs a code table".into(),
            ))
        }
        (true, Some(_)) => {
            return Err(CodecError::InvalidParameter(
                "lossless stream must not carry a code table".into(),
            ))
        }
        _ => {}
    }
    let mut out = Vec::with_capacity(HEADER_LEN + payload.len() + TRAILER_LEN);
    header.write(&mut out);
    if let Some(t) = table {
        let expect = 1usize << header.bit_depth;
        if t.lengths().len() != expect {
            return Err(CodecError::DimensionMismatch {
                expected: expect,
                got: t.lengths().len(),
                context: "code table size vs bit depth",
            });
        }
        out.extend_from_slice(t.lengths());
    }
    out.extend_from_slice(payload);
    out.extend_from_slice(&(payload_bit_count as u32).to_le_bytes());
    Ok(out)
}

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        if self.pos + n > self.bytes.len() {
            return Err(CodecError::MalformedBitstream(format!(
                "needed {n} bytes at offset {}, stream has {}",
                self.pos,
                self.bytes.len()
            )));
        }
        let s = &self.bytes[self.pos..self.pos + n];
        self.pos += n;
        Ok(s)
    }

    fn u8(&mut self) -> Result<u8> {
        Ok(self.take(1)?[0])
    }

    fn u16(&mut self) -> Result<u16> {
        Ok(u16::from_le_bytes(self.take(2)?.try_into().unwrap()))
    }

    fn u64(&mut self) -> Result<u64> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }

    fn f32(&mut self) -> Result<f32> {
        Ok(f32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }
}

/// Parses and validates a `.csgt` byte sequence.
pub fn read_bitstream(bytes: &[u8]) -> Result<Bitstream> {
    let mut r = Reader { bytes, pos: 0 };
    if r.take(4)? != MAGIC {
        return Err(CodecError::MalformedBitstream("bad magic".into()));
    }
    let version = r.u8()?;
    if version != VERSION {
        return Err(CodecError::MalformedBitstream(format!(
            "unsupported version {version}"
        )));
    }
    let header = Header {
        width: r.u16()?,
        height: r.u16()?,
        block_size: r.u8()?,
        m: r.u16()?,
        bit_depth: r.u8()?,
        matrix_seed: r.u64()?,
        scramble_seed: r.u64()?,
        prng_id: {
            let id = r.u8()?;
            PrngId::from_u8(id).ok_or_else(|| {
                CodecError::InconsistentHeader(format!("unknown prng id {id}"))
            })?
        },
        gray_constant: r.f32()?,
        q_lower: r.f32()?,
        q_upper: r.f32()?,
    };
    header.validate()?;

    let table = if header.is_lossless() {
        None
    } else {
        let lengths = r.take(1usize << header.bit_depth)?.to_vec();
        Some(HuffmanTable::from_lengths(lengths)?)
    };

    if bytes.len() < r.pos + TRAILER_LEN {
        return Err(CodecError::MalformedBitstream("missing bit-count trailer".into()));
    }
    let payload = bytes[r.pos..bytes.len() - TRAILER_LEN].to_vec();
    let payload_bit_count = u64::from(u32::from_le_bytes(
        bytes[bytes.len() - TRAILER_LEN..].try_into().unwrap(),
    ));

    let capacity = payload.len() as u64 * 8;
    if payload_bit_count > capacity {
        return Err(CodecError::MalformedBitstream(format!(
            "bit count {payload_bit_count} exceeds payload capacity {capacity}"
        )));
    }
    if !payload.is_empty() && payload_bit_count <= capacity - 8 {
        return Err(CodecError::MalformedBitstream(
            "payload has whole bytes past the recorded bit count".into(),
        ));
    }
    if header.is_lossless() {
        let expect = header.measurement_count() * 4;
        if payload.len() != expect {
            return Err(CodecError::MalformedBitstream(format!(
                "lossless payload is {} bytes, header implies {expect}",
                payload.len()
            )));
        }
        if payload_bit_count != capacity {
            return Err(CodecError::MalformedBitstream(
                "lossless payload must be byte-aligned".into(),
            ));
        }
    }
    Ok(Bitstream { header, table, payload, payload_bit_count })
}

/// Measured rate of a finished stream next to the rate-model prediction
/// `R_x = (M/N) R_y` with `R_y` taken as the average code length, plus
/// the container overhead.
#[derive(Debug, Clone, Copy)]
pub struct RateReport {
    /// Whole-stream bits over source pixels.
    pub bpp: f64,
    /// Model prediction including overhead.
    pub predicted_bpp: f64,
    /// Entropy-based lower bound on the payload rate, excluding overhead.
    pub entropy_bpp: f64,
    pub avg_code_length: f64,
    pub index_entropy: f64,
    pub overhead_bits: usize,
}

pub fn measure_rate(
    stream_len: usize,
    header: &Header,
    indices: &[u16],
    table: Option<&HuffmanTable>,
) -> RateReport {
    let pixels = header.width as usize * header.height as usize;
    let samples_per_pixel = header.measurement_count() as f64 / pixels as f64;
    let (avg_code_length, index_entropy, overhead_bits) = match table {
        Some(t) => {
            let mut counts = vec![0u64; t.lengths().len()];
            for &i in indices {
                counts[i as usize] += 1;
            }
            (
                t.average_length(&counts),
                crate::metrics::empirical_entropy(indices),
                (HEADER_LEN + t.lengths().len() + TRAILER_LEN) * 8,
            )
        }
        None => (32.0, 32.0, (HEADER_LEN + TRAILER_LEN) * 8),
    };
    RateReport {
        bpp: stream_len as f64 * 8.0 / pixels as f64,
        predicted_bpp: samples_per_pixel * avg_code_length
            + overhead_bits as f64 / pixels as f64,
        entropy_bpp: samples_per_pixel * index_entropy,
        avg_code_length,
        index_entropy,
        overhead_bits,
    }
}
