//! Baseline sequential JFIF encoder/decoder.
//!
//! Scope: 8-bit precision, Huffman coding with the standard Annex-K
//! tables, 4:4:4 color or single-component grayscale, no restart markers.
//! The entropy layer is lossless: quantized levels survive an
//! encode/decode round trip bit-exactly, and the DQT segments carry the
//! caller's table unchanged.

mod decoder;
mod encoder;
mod huffman;
mod tables;

pub use decoder::{decode, decode_levels, DecodedLevels};
pub use encoder::{component_levels, encode};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum JpegError {
    #[error("image dimensions must be in 1..=65535")]
    BadDimensions,
    #[error("unexpected marker 0x{marker:04x} at byte {offset}")]
    BadMarker { marker: u16, offset: usize },
    #[error("progressive JPEG (SOF{sof}) at byte {offset} is not supported")]
    UnsupportedProgressive { sof: u8, offset: usize },
    #[error("arithmetic coding (SOF{sof}) at byte {offset} is not supported")]
    UnsupportedArithmetic { sof: u8, offset: usize },
    #[error("subsampled chroma at byte {offset} is not supported, only 4:4:4/grayscale")]
    UnsupportedSubsampling { offset: usize },
    #[error("{feature} at byte {offset} is not supported")]
    Unsupported {
        feature: &'static str,
        offset: usize,
    },
    #[error("scan data truncated at byte {offset}")]
    TruncatedScan { offset: usize },
    #[error("file truncated at byte {offset}")]
    Truncated { offset: usize },
    #[error("malformed segment at byte {offset}: {reason}")]
    MalformedSegment { offset: usize, reason: String },
}
