use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Normalization group: one scale per `Size(g)` consecutive weights of a
/// row, or one per row (`g = -1` on the wire).
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(into = "i64", try_from = "i64")]
pub enum Group {
    Row,
    Size(usize),
}

impl Group {
    pub fn from_i64(g: i64) -> Result<Self> {
        match g {
            -1 => Ok(Group::Row),
            g if g >= 1 => Ok(Group::Size(g as usize)),
            g => Err(Error::Config(format!("group size must be -1 or >= 1, got {g}"))),
        }
    }

    pub fn as_i64(self) -> i64 {
        match self {
            Group::Row => -1,
            Group::Size(g) => g as i64,
        }
    }

    /// Effective group width for a matrix with `cols` columns.
    pub fn width(self, cols: usize) -> usize {
        match self {
            Group::Row => cols,
            Group::Size(g) => g,
        }
    }
}

impl From<Group> for i64 {
    fn from(g: Group) -> i64 {
        g.as_i64()
    }
}

impl TryFrom<i64> for Group {
    type Error = Error;
    fn try_from(g: i64) -> Result<Self> {
        Group::from_i64(g)
    }
}

impl fmt::Display for Group {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.as_i64())
    }
}

/// The `(v, m, b, g)` tuple that fixes a layer's storage format.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Scheme {
    /// Vector length in elements.
    pub v: usize,
    /// Number of additive codebooks.
    pub m: usize,
    /// Bits per code; each codebook has `2^b` entries.
    pub b: u32,
    pub g: Group,
}

impl Scheme {
    pub fn new(v: usize, m: usize, b: u32, g: Group) -> Result<Self> {
        let s = Scheme { v, m, b, g };
        s.validate()?;
        Ok(s)
    }

    pub fn validate(&self) -> Result<()> {
        if self.v == 0 {
            return Err(Error::Config("v must be >= 1".into()));
        }
        if self.m == 0 {
            return Err(Error::Config("m must be >= 1".into()));
        }
        if !(1..=16).contains(&self.b) {
            return Err(Error::Config(format!("b must be in 1..=16, got {}", self.b)));
        }
        if let Group::Size(g) = self.g {
            if g < self.v {
                return Err(Error::Config(format!("group size {g} is smaller than v = {}", self.v)));
            }
            if g % self.v != 0 {
                return Err(Error::Config(format!("group size {g} is not a multiple of v = {}", self.v)));
            }
        }
        Ok(())
    }

    /// Check the divisibility rules against a `rows x cols` weight matrix.
    pub fn check_dims(&self, rows: usize, cols: usize) -> Result<()> {
        self.validate()?;
        if rows == 0 || cols == 0 {
            return Err(Error::Config(format!("empty matrix {rows}x{cols}")));
        }
        if cols % self.v != 0 {
            return Err(Error::Config(format!("K = {cols} is not divisible by v = {}", self.v)));
        }
        if let Group::Size(g) = self.g {
            if cols % g != 0 {
                return Err(Error::Config(format!("K = {cols} is not divisible by g = {g}")));
            }
        }
        Ok(())
    }

    pub fn codebook_len(&self) -> usize {
        1usize << self.b
    }
}

impl fmt::Display for Scheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "v={} m={} b={} g={}", self.v, self.m, self.b, self.g)
    }
}

pub const DEFAULT_KMEANS_ITERS: usize = 25;

/// Everything `quantize_layer` needs: the format tuple plus fitting knobs.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct QuantConfig {
    pub scheme: Scheme,
    pub seed: u64,
    pub kmeans_iters: usize,
}

impl QuantConfig {
    pub fn new(scheme: Scheme, seed: u64) -> Self {
        QuantConfig {
            scheme,
            seed,
            kmeans_iters: DEFAULT_KMEANS_ITERS,
        }
    }

    pub fn with_iters(mut self, iters: usize) -> Self {
        self.kmeans_iters = iters;
        self
    }
}
