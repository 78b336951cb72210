//! Block compressed sensing image codec with gray-transformation
//! preprocessing.
//!
//! The encoder scrambles pixels, splits the image into fixed-size blocks,
//! and measures each block with one seeded Gaussian matrix. Subtracting
//! the image mean before sampling (the gray transform) shrinks the
//! dynamic range of the measurements, so a uniform quantizer with the
//! same bit depth spends its levels on a tighter interval and loses less.
//! The decoder regenerates the matrix and the constant's measurement from
//! header fields, undoes the shift in the measurement domain, and runs a
//! smoothed projected Landweber reconstruction.

pub mod basis;
pub mod bench;
pub mod codec;
pub mod container;
pub mod error;
pub mod gray;
pub mod huffman;
pub mod image;
pub mod metrics;
pub mod quantizer;
pub mod rng;
pub mod sensing;
pub mod solver;
pub mod synth;

pub use error::{CodecError, Result};
