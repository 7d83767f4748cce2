//! GEMM engines over quantized layers.
//!
//! All three compute `Y = W X` with `W` the `M x K` weight matrix and `X`
//! a `K x N` input, and all tally their work in [`OpCounters`]:
//!
//! * [`dense_gemm`]: plain triple loop over binary16 operands.
//! * [`dequant_gemm`]: decode the weights from codes, then multiply. The
//!   `Mirrored` order decodes on the fly with exactly the floating-point
//!   operation sequence of the Psumbook engine and serves as its oracle.
//! * [`codegemm_gemm`]: for each input column and K-tile, precompute every
//!   centroid/segment inner product once (the Psumbook), then produce each
//!   output by gathering `m` entries per segment with the codes.
//!
//! Accumulation order is fixed: segments ascending, codebooks ascending
//! within a segment, vector elements ascending inside a dot product, with
//! the group scale applied once per segment. The order does not depend on
//! `t_w`, `t_h` or the worker count, so outputs are bit-reproducible.

mod codegemm;
mod dense;
mod dequant;
mod psumbook;

use serde::{Deserialize, Serialize};

pub use self::codegemm::codegemm_gemm;
pub use self::dense::{dense_gemm, Accumulator};
pub use self::dequant::{dequant_gemm, DequantOrder};
pub use self::psumbook::{build_psumbook, Psumbook};

use crate::error::{Error, Result};
use crate::quantizer::{Group, Scheme};

/// Exact event tallies for one engine run.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct OpCounters {
    /// Multiply-accumulates spent building Psumbooks.
    pub mac_build: u64,
    /// Additions of a fetched Psum into a segment sum.
    pub mac_read_adds: u64,
    /// Psumbook fetches.
    pub lookups: u64,
    /// Multiply-accumulates of a dense (or dequantized) product.
    pub mac_dense: u64,
    /// Largest Psumbook built, in entries.
    pub psumbook_entries: u64,
}

impl OpCounters {
    pub fn merge(&mut self, other: &OpCounters) {
        self.mac_build += other.mac_build;
        self.mac_read_adds += other.mac_read_adds;
        self.lookups += other.lookups;
        self.mac_dense += other.mac_dense;
        self.psumbook_entries = self.psumbook_entries.max(other.psumbook_entries);
    }

    /// `mac_build / (mac_build + mac_read_adds)`, if any Psumbook work was done.
    pub fn build_fraction(&self) -> Option<f64> {
        phase_split(self).ok().map(|(b, _)| b)
    }
}

/// Build and read shares of the Psumbook work.
pub fn phase_split(counters: &OpCounters) -> Result<(f64, f64)> {
    let total = counters.mac_build + counters.mac_read_adds;
    if total == 0 {
        return Err(Error::ZeroCounters);
    }
    let build = counters.mac_build as f64 / total as f64;
    let read = counters.mac_read_adds as f64 / total as f64;
    Ok((build, read))
}

pub const DEFAULT_TILE_WIDTH: usize = 32;
pub const DEFAULT_TILE_HEIGHT: usize = 2048;

/// Tiling of the Psumbook engine: `tw` along K (one Psumbook per tile and
/// input column), `th` rows per worker task.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TileConfig {
    pub tw: usize,
    pub th: usize,
}

impl Default for TileConfig {
    fn default() -> Self {
        TileConfig {
            tw: DEFAULT_TILE_WIDTH,
            th: DEFAULT_TILE_HEIGHT,
        }
    }
}

impl TileConfig {
    pub fn new(tw: usize, th: usize) -> Self {
        TileConfig { tw, th }
    }

    pub fn validate(&self, scheme: &Scheme) -> Result<()> {
        let v = scheme.v;
        if self.th == 0 {
            return Err(Error::Config("t_h must be >= 1".into()));
        }
        if self.tw < v || self.tw % v != 0 {
            return Err(Error::Config(format!("t_w = {} must be a positive multiple of v = {v}", self.tw)));
        }
        if let Group::Size(g) = scheme.g {
            let nested = self.tw <= g && g % self.tw == 0;
            let covering = self.tw % g == 0;
            if !nested && !covering {
                return Err(Error::Config(format!(
                    "t_w = {} straddles group boundaries (g = {g})",
                    self.tw
                )));
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn phase_split_cases() {
        let c = OpCounters {
            mac_build: 10,
            mac_read_adds: 10,
            ..Default::default()
        };
        assert_eq!(phase_split(&c).unwrap(), (0.5, 0.5));
        assert!(matches!(phase_split(&OpCounters::default()), Err(Error::ZeroCounters)));
    }

    #[test]
    fn tile_rules() {
        let s = Scheme::new(8, 1, 8, Group::Size(64)).unwrap();
        assert!(TileConfig::new(32, 2048).validate(&s).is_ok());
        assert!(TileConfig::new(128, 2048).validate(&s).is_ok());
        assert!(TileConfig::new(4, 2048).validate(&s).is_err());
        assert!(TileConfig::new(36, 2048).validate(&s).is_err());
        assert!(TileConfig::new(32, 0).validate(&s).is_err());
        let s = Scheme::new(8, 1, 8, Group::Size(24)).unwrap();
        assert!(TileConfig::new(16, 2048).validate(&s).is_err());
        assert!(TileConfig::new(48, 2048).validate(&s).is_ok());
    }
}
