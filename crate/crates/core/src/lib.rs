//! Codebook weight quantization and lookup-table GEMM.
//!
//! A weight matrix is compressed into additive codebooks ([`quantizer`]),
//! stored in a self-describing container ([`storage`]), and multiplied by
//! one of three engines ([`engines`]): a dense reference, a
//! dequantize-then-multiply baseline, and the Psumbook engine, which
//! precomputes every centroid/input inner product for a tile and then
//! gathers them by code. Every engine reports exact operation counts, and
//! [`accounting`] predicts those counts (and the bit budget) in closed form.

pub mod accounting;
pub mod bench;
pub mod cli;
pub mod engines;
mod error;
pub mod quantizer;
pub mod storage;
pub mod tensors;

pub use error::{Error, Result};
