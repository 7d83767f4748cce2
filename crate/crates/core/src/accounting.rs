//! Closed-form bit budgets and operation counts.
//!
//! Everything is exact integer/rational arithmetic; `f64` appears only when
//! values are rendered for reports.

use num_rational::Ratio;
use serde::Serialize;

use crate::engines::TileConfig;
use crate::error::{Error, Result};
use crate::quantizer::{Group, Scheme};

/// Bits per stored binary16 element (codebook entries and scales).
pub const ELEMENT_BITS: u128 = 16;

pub type Rational = Ratio<u128>;

pub fn rational_to_f64(r: &Rational) -> f64 {
    *r.numer() as f64 / *r.denom() as f64
}

/// Average bits per weight, split by what the bits are spent on.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BitBreakdown {
    pub rows: u64,
    pub cols: u64,
    pub codebook_bits: u128,
    pub code_bits: u128,
    pub norm_bits: u128,
    pub q_code: Rational,
    pub q_codebook: Rational,
    pub q_norm: Rational,
    pub q_bar: Rational,
    pub total_bits: u128,
}

/// `f64` rendering of a [`BitBreakdown`], for JSON output.
#[derive(Clone, Debug, Serialize)]
pub struct BitReport {
    pub q_code: f64,
    pub q_codebook: f64,
    pub q_norm: f64,
    pub q_bar: f64,
    pub total_bits: u128,
    pub codebook_bits: u128,
    pub code_bits: u128,
    pub norm_bits: u128,
}

impl BitBreakdown {
    pub fn report(&self) -> BitReport {
        BitReport {
            q_code: rational_to_f64(&self.q_code),
            q_codebook: rational_to_f64(&self.q_codebook),
            q_norm: rational_to_f64(&self.q_norm),
            q_bar: rational_to_f64(&self.q_bar),
            total_bits: self.total_bits,
            codebook_bits: self.codebook_bits,
            code_bits: self.code_bits,
            norm_bits: self.norm_bits,
        }
    }

    pub fn q_bar_f64(&self) -> f64 {
        rational_to_f64(&self.q_bar)
    }
}

/// Average bits per weight of an `rows x cols` layer:
/// `(16 m 2^b v + b m M K/v + 16 M K/g) / (M K)`, with `g = K` for row-wise
/// normalization.
pub fn bit_breakdown(scheme: &Scheme, rows: usize, cols: usize) -> Result<BitBreakdown> {
    scheme.check_dims(rows, cols)?;
    let (mm, kk) = (rows as u128, cols as u128);
    let (v, m, b) = (scheme.v as u128, scheme.m as u128, scheme.b as u128);
    let g = scheme.g.width(cols) as u128;

    let codebook_bits = ELEMENT_BITS * m * (1u128 << b) * v;
    let code_bits = b * m * mm * (kk / v);
    let norm_bits = ELEMENT_BITS * mm * (kk / g);
    let weights = mm * kk;
    let total_bits = codebook_bits + code_bits + norm_bits;

    let q_code = Rational::new(code_bits, weights);
    let q_codebook = Rational::new(codebook_bits, weights);
    let q_norm = Rational::new(norm_bits, weights);
    let q_bar = q_code + q_codebook + q_norm;
    debug_assert_eq!(q_bar * Rational::from_integer(weights), Rational::from_integer(total_bits));

    Ok(BitBreakdown {
        rows: rows as u64,
        cols: cols as u64,
        codebook_bits,
        code_bits,
        norm_bits,
        q_code,
        q_codebook,
        q_norm,
        q_bar,
        total_bits,
    })
}

/// Predicted operation counts of the Psumbook engine against a dense GEMM
/// with an `M x K` weight and `K x N` input.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ComplexityPrediction {
    /// `m 2^b K N`
    pub c_build: u128,
    /// `m M (K/v) N`
    pub c_read: u128,
    /// `M N K`
    pub c_dense: u128,
    /// `c_read / c_dense`, always `m / v`.
    pub reduction_factor: Rational,
    /// `c_build / (c_build + c_read) = 2^b v / (2^b v + M)`.
    pub build_fraction: Rational,
    /// Psumbook size for one full tile and input column: `m 2^b t_w / v`.
    pub psumbook_entries_per_tile: u128,
    /// Full codebook size: `m 2^b v`.
    pub codebook_elements: u128,
}

#[derive(Clone, Debug, Serialize)]
pub struct ComplexityReport {
    pub c_build: u128,
    pub c_read: u128,
    pub c_dense: u128,
    pub reduction_factor: f64,
    pub build_fraction: f64,
    pub psumbook_entries_per_tile: u128,
    pub codebook_elements: u128,
}

impl ComplexityPrediction {
    pub fn report(&self) -> ComplexityReport {
        ComplexityReport {
            c_build: self.c_build,
            c_read: self.c_read,
            c_dense: self.c_dense,
            reduction_factor: rational_to_f64(&self.reduction_factor),
            build_fraction: rational_to_f64(&self.build_fraction),
            psumbook_entries_per_tile: self.psumbook_entries_per_tile,
            codebook_elements: self.codebook_elements,
        }
    }
}

pub fn predict_complexity(scheme: &Scheme, rows: usize, n: usize, cols: usize, tw: usize) -> Result<ComplexityPrediction> {
    scheme.check_dims(rows, cols)?;
    TileConfig::new(tw, 1).validate(scheme)?;
    if n == 0 {
        return Err(Error::Config("N must be >= 1".into()));
    }
    let (mm, nn, kk) = (rows as u128, n as u128, cols as u128);
    let (v, m) = (scheme.v as u128, scheme.m as u128);
    let codes = 1u128 << scheme.b;

    let c_build = m * codes * kk * nn;
    let c_read = m * mm * (kk / v) * nn;
    let c_dense = mm * nn * kk;
    Ok(ComplexityPrediction {
        c_build,
        c_read,
        c_dense,
        reduction_factor: Rational::new(c_read, c_dense),
        build_fraction: Rational::new(c_build, c_build + c_read),
        psumbook_entries_per_tile: m * codes * (tw as u128) / v,
        codebook_elements: m * codes * v,
    })
}

/// Bytes needed to hold `m` binary16 codebooks of `2^b` length-`v` centroids.
pub fn aqlm_codebook_bytes(m: usize, b: u32, v: usize) -> Result<u64> {
    Scheme::new(v, m, b, Group::Row)?;
    Ok(m as u64 * (1u64 << b) * v as u64 * 2)
}

/// Candidate values for [`enumerate_configs`].
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ConfigRanges {
    pub v: Vec<usize>,
    pub m: Vec<usize>,
    pub b: Vec<u32>,
    pub g: Vec<Group>,
}

impl Default for ConfigRanges {
    fn default() -> Self {
        ConfigRanges {
            v: vec![1, 2, 4, 8, 16, 32],
            m: vec![1, 2, 3, 4],
            b: (1..=16).collect(),
            g: [-1, 8, 16, 32, 64, 128, 256]
                .into_iter()
                .map(|g| Group::from_i64(g).unwrap())
                .collect(),
        }
    }
}

/// Every valid `(v, m, b, g)` from `ranges` whose average bits per weight
/// lies within `tol` of `target`, ordered by `(q_bar, m / v)`.
pub fn enumerate_configs(
    target: f64,
    tol: f64,
    rows: usize,
    cols: usize,
    ranges: &ConfigRanges,
) -> Vec<(Scheme, BitBreakdown)> {
    let mut hits = Vec::new();
    for &v in &ranges.v {
        for &m in &ranges.m {
            for &b in &ranges.b {
                for &g in &ranges.g {
                    let Ok(scheme) = Scheme::new(v, m, b, g) else {
                        continue;
                    };
                    let Ok(bits) = bit_breakdown(&scheme, rows, cols) else {
                        continue;
                    };
                    if (bits.q_bar_f64() - target).abs() <= tol {
                        hits.push((scheme, bits));
                    }
                }
            }
        }
    }
    hits.sort_by(|(sa, a), (sb, b)| {
        a.q_bar
            .cmp(&b.q_bar)
            .then(Rational::new(sa.m as u128, sa.v as u128).cmp(&Rational::new(sb.m as u128, sb.v as u128)))
            .then((sa.v, sa.m, sa.b, sa.g.as_i64()).cmp(&(sb.v, sb.m, sb.b, sb.g.as_i64())))
    });
    hits
}
