//! Codebook quantization of weight matrices.
//!
//! The pipeline: per-group max-abs normalization, partition into
//! length-`v` vectors, then `m` rounds of k-means on the running residual.
//! Each round contributes one codebook of `2^b` centroids and one plane of
//! `b`-bit codes; decoding sums one centroid per codebook and rescales.

mod config;
mod kmeans;
mod layer;
mod packing;
mod scales;

pub use self::config::{Group, QuantConfig, Scheme, DEFAULT_KMEANS_ITERS};
pub use self::kmeans::{kmeans_fit, nearest, KMeansFit};
pub use self::layer::{
    partition_vectors, quant_error, quantize_layer, quantize_layer_with_report, reconstruct,
    synthetic_layer, Codebook, QuantReport, QuantizedLayer,
};
pub use self::packing::{pack_codes, packed_len, unpack_codes, CodePlane};
pub use self::scales::{compute_scales, ScalePlane};
