//! Deterministic random sources for matrix generation and scrambling.
//!
//! Every random draw in the codec goes through [`SeededRng`]: a ChaCha20
//! stream keyed from a 64-bit seed, with uniform integers produced by
//! rejection sampling and normal deviates by the Box-Muller transform.
//! The full draw sequence is therefore fixed by this module, not by the
//! internals of a distributions crate, and a decoder that knows the seed
//! and the [`PrngId`] regenerates the measurement matrix bit for bit.

use rand_chacha::ChaCha20Rng;
use rand_core::{RngCore, SeedableRng};

/// Identifies the generator family recorded in the bitstream header.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[repr(u8)]
pub enum PrngId {
    /// ChaCha20 stream keyed by splitmix64 expansion, Box-Muller normals.
    ChaCha20BoxMullerV1 = 1,
}

impl PrngId {
    pub fn from_u8(value: u8) -> Option<Self> {
        match value {
            1 => Some(Self::ChaCha20BoxMullerV1),
            _ => None,
        }
    }
}

fn splitmix64(state: &mut u64) -> u64 {
    *state = state.wrapping_add(0x9e37_79b9_7f4a_7c15);
    let mut z = *state;
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Seeded deterministic generator.
pub struct SeededRng {
    inner: ChaCha20Rng,
    spare_gaussian: Option<f64>,
}

impl SeededRng {
    /// Expands `seed` to a 256-bit ChaCha20 key via splitmix64.
    pub fn new(seed: u64) -> Self {
        let mut state = seed;
        let mut key = [0u8; 32];
        for chunk in key.chunks_exact_mut(8) {
            chunk.copy_from_slice(&splitmix64(&mut state).to_le_bytes());
        }
        Self { inner: ChaCha20Rng::from_seed(key), spare_gaussian: None }
    }

    pub fn next_u64(&mut self) -> u64 {
        self.inner.next_u64()
    }

    /// Uniform in `[0, bound)` without modulo bias.
    pub fn next_index(&mut self, bound: usize) -> usize {
        assert!(bound >= 1, "bound must be positive");
        let bound = bound as u64;
        // Reject draws below 2^64 mod bound so every residue is equally likely.
        let reject_below = bound.wrapping_neg() % bound;
        loop {
            let v = self.next_u64();
            if v >= reject_below {
                return (v % bound) as usize;
            }
        }
    }

    /// Uniform in `[0, 1)` with 53-bit resolution.
    pub fn next_f64(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    /// Standard normal deviate via Box-Muller; pairs are cached.
    pub fn next_gaussian(&mut self) -> f64 {
        if let Some(z) = self.spare_gaussian.take() {
            return z;
        }
        // u1 shifted into (0, 1] so the logarithm stays finite.
        let u1 = 1.0 - self.next_f64();
        let u2 = self.next_f64();
        let radius = (-2.0 * u1.ln()).sqrt();
        let theta = 2.0 * std::f64::consts::PI * u2;
        self.spare_gaussian = Some(radius * theta.sin());
        radius * theta.cos()
    }
}
