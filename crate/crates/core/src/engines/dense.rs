use std::ops::{Add, Mul};

use rayon::prelude::*;

use crate::engines::OpCounters;
use crate::error::{Error, Result};
use crate::tensors::{Half, Matrix};

/// Accumulation precision for [`dense_gemm`].
pub trait Accumulator: Copy + Send + Sync + Add<Output = Self> + Mul<Output = Self> + 'static {
    const ZERO: Self;
    fn widen(h: Half) -> Self;
}

impl Accumulator for f32 {
    const ZERO: Self = 0.0;
    #[inline]
    fn widen(h: Half) -> Self {
        h.to_f32()
    }
}

impl Accumulator for f64 {
    const ZERO: Self = 0.0;
    #[inline]
    fn widen(h: Half) -> Self {
        h.to_f64()
    }
}

/// `Y[r, c] = sum_k W[r, k] * X[k, c]`, ascending `k`, accumulated in `A`.
pub fn dense_gemm<A: Accumulator>(w: &Matrix<Half>, x: &Matrix<Half>) -> Result<(Matrix<A>, OpCounters)> {
    let (m, k) = w.shape();
    if x.rows() != k {
        return Err(Error::Shape(format!(
            "W is {m}x{k} but X is {}x{}",
            x.rows(),
            x.cols()
        )));
    }
    let n = x.cols();
    let columns: Vec<Vec<A>> = (0..n)
        .map(|c| x.column(c).into_iter().map(A::widen).collect())
        .collect();

    let mut out = vec![A::ZERO; m * n];
    let macs: u64 = out
        .par_chunks_mut(n)
        .zip(w.as_slice().par_chunks_exact(k))
        .map(|(y_row, w_row)| {
            let w_row: Vec<A> = w_row.iter().map(|&h| A::widen(h)).collect();
            let mut macs = 0u64;
            for (y, col) in y_row.iter_mut().zip(&columns) {
                let mut acc = A::ZERO;
                for (&a, &b) in w_row.iter().zip(col) {
                    acc = acc + a * b;
                    macs += 1;
                }
                *y = acc;
            }
            macs
        })
        .sum();

    let counters = OpCounters {
        mac_dense: macs,
        ..Default::default()
    };
    Ok((Matrix::from_vec(m, n, out)?, counters))
}
