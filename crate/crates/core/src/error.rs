use std::io;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

/// Errors produced anywhere in the crate.
///
/// File-format failures keep separate variants so callers (and the CLI's
/// JSON error output) can tell a corrupt header from a short read.
#[derive(Debug, Error)]
pub enum Error {
    #[error("I/O error: {0}")]
    Io(#[from] io::Error),

    #[error("bad magic: expected {expected:?}, found {found:?}")]
    BadMagic { expected: [u8; 4], found: [u8; 4] },

    #[error("unsupported version {found} (expected {expected})")]
    VersionMismatch { expected: u32, found: u32 },

    #[error("truncated {what}: needed {needed} bytes, {available} available")]
    Truncated {
        what: &'static str,
        needed: u64,
        available: u64,
    },

    #[error("dimension overflow: {0}")]
    DimOverflow(String),

    #[error("invalid layer: {0}")]
    InvalidLayer(String),

    #[error("config error: {0}")]
    Config(String),

    #[error("shape mismatch: {0}")]
    Shape(String),

    #[error("code {code} does not fit in {bits} bits")]
    CodeOutOfRange { code: u32, bits: u32 },

    #[error("k-means needs at least one point")]
    EmptyPointSet,

    #[error("reference matrix has zero Frobenius norm")]
    ZeroNorm,

    #[error("counters are all zero")]
    ZeroCounters,

    #[error("residual SSE increased at stage {stage}: {before} -> {after}")]
    ResidualIncrease { stage: usize, before: f64, after: f64 },

    #[error("unknown suite {0:?}")]
    UnknownSuite(String),

    #[error("malformed shape list: {0}")]
    MalformedShapes(String),
}

impl Error {
    /// Stable short identifier, used as the `kind` field of CLI error JSON.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::Io(_) => "io",
            Error::BadMagic { .. } => "bad_magic",
            Error::VersionMismatch { .. } => "version_mismatch",
            Error::Truncated { .. } => "truncated",
            Error::DimOverflow(_) => "dim_overflow",
            Error::InvalidLayer(_) => "invalid_layer",
            Error::Config(_) => "config",
            Error::Shape(_) => "shape",
            Error::CodeOutOfRange { .. } => "code_out_of_range",
            Error::EmptyPointSet => "empty_point_set",
            Error::ZeroNorm => "zero_norm",
            Error::ZeroCounters => "zero_counters",
            Error::ResidualIncrease { .. } => "residual_increase",
            Error::UnknownSuite(_) => "unknown_suite",
            Error::MalformedShapes(_) => "malformed_shapes",
        }
    }
}
