use std::fmt;
use std::io;

/// Error type shared by all codec stages.
#[derive(Debug)]
pub enum CodecError {
    /// Operation received inputs whose shapes do not line up.
    DimensionMismatch { expected: usize, got: usize, context: &'static str },
    /// A parameter is outside its documented domain.
    InvalidParameter(String),
    /// Input collection was empty where at least one element is required.
    EmptyInput(&'static str),
    /// A sample was NaN or infinite.
    NonFiniteSample,
    /// Quantizer index outside the configured level range.
    IndexOutOfRange { index: u16, levels: u32 },
    /// Symbol has no assigned code in the Huffman table.
    MissingCode(u16),
    /// Bitstream payload ended before all symbols were decoded.
    PayloadExhausted { decoded: usize, expected: usize },
    /// Extra non-zero bits after the recorded payload length.
    TrailingGarbage,
    /// Container-level parse failure (magic, version, truncation, field bounds).
    MalformedBitstream(String),
    /// Header fields are individually valid but mutually inconsistent.
    InconsistentHeader(String),
    /// PGM parse failure.
    MalformedPgm(String),
    Io(io::Error),
}

impl fmt::Display for CodecError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::DimensionMismatch { expected, got, context } => {
                write!(f, "{context}: expected length {expected}, got {got}")
            }
            Self::InvalidParameter(msg) => write!(f, "invalid parameter: {msg}"),
            Self::EmptyInput(what) => write!(f, "empty input: {what}"),
            Self::NonFiniteSample => write!(f, "sample is NaN or infinite"),
            Self::IndexOutOfRange { index, levels } => {
                write!(f, "index {index} outside quantizer range of {levels} levels")
            }
            Self::MissingCode(sym) => write!(f, "symbol {sym} has no Huffman code"),
            Self::PayloadExhausted { decoded, expected } => {
                write!(f, "payload exhausted after {decoded} of {expected} symbols")
            }
            Self::TrailingGarbage => write!(f, "non-zero bits beyond payload padding"),
            Self::MalformedBitstream(msg) => write!(f, "malformed bitstream: {msg}"),
            Self::InconsistentHeader(msg) => write!(f, "inconsistent header: {msg}"),
            Self::MalformedPgm(msg) => write!(f, "malformed PGM: {msg}"),
            Self::Io(err) => write!(f, "i/o error: {err}"),
        }
    }
}

impl std::error::Error for CodecError {
    fn source(&self) -> Option<&(dyn std::error::Error + 'static)> {
        match self {
            Self::Io(err) => Some(err),
            _ => None,
        }
    }
}

impl From<io::Error> for CodecError {
    fn from(err: io::Error) -> Self {
        Self::Io(err)
    }
}

pub type Result<T> = std::result::Result<T, CodecError>;
