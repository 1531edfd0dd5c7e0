//! DCT-domain image purification codec.
//!
//! The pipeline mirrors baseline JPEG — 8x8 partition, DCT, quantization,
//! zig-zag, entropy coding — but the quantization table is synthesized from
//! per-frequency coefficient statistics of the image being processed instead
//! of a perceptual model. Bands with high cross-block variance (the features
//! a classifier keys on) get a fine step, everything else gets a step coarse
//! enough to round bounded input perturbations to zero.
//!
//! Modules:
//! - [`image_io`]: PNM (P5/P6) ingestion and the JFIF color transform.
//! - [`dct`]: block partitioning, forward/inverse 2D DCT-II, zig-zag order.
//! - [`quant`]: quantization tables, QF scaling, the filtering-step bound.
//! - [`freq`]: per-band statistics and two-band table synthesis.
//! - [`jpeg`]: baseline JFIF encoder/decoder carrying custom tables.
//! - [`defense`]: end-to-end purification, distortion metrics, and a toy
//!   gradient-sign attack harness for measuring defense efficiency.

pub mod dct;
pub mod defense;
pub mod freq;
pub mod image_io;
pub mod jpeg;
pub mod quant;
pub mod rng;

mod pipeline;
