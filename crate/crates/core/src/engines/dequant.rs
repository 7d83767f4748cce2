use rayon::prelude::*;

use crate::engines::codegemm::{check_input, segment_scales};
use crate::engines::{dense_gemm, OpCounters};
use crate::error::Result;
use crate::quantizer::{reconstruct, Codebook, QuantizedLayer};
use crate::tensors::{Half, Matrix};

/// Operation order of the dequantization engine.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum DequantOrder {
    /// Materialize the binary16 weights, then run the dense product.
    Naive,
    /// Decode on the fly in the Psumbook engine's exact arithmetic order:
    /// per segment, per codebook, a centroid/segment dot product; sum over
    /// codebooks, scale, accumulate.
    Mirrored,
}

pub fn dequant_gemm(q: &QuantizedLayer, x: &Matrix<Half>, order: DequantOrder) -> Result<(Matrix<f32>, OpCounters)> {
    check_input(q, x)?;
    match order {
        DequantOrder::Naive => {
            let w_hat = reconstruct(q);
            dense_gemm::<f32>(&w_hat, x)
        }
        DequantOrder::Mirrored => mirrored(q, x),
    }
}

fn mirrored(q: &QuantizedLayer, x: &Matrix<Half>) -> Result<(Matrix<f32>, OpCounters)> {
    let (rows, n) = (q.rows(), x.cols());
    let v = q.scheme().v;
    let segs = q.segments();
    let books: Vec<Vec<f32>> = q.books().iter().map(Codebook::widened).collect();
    let scales = segment_scales(q);
    let planes = q.planes();
    let columns: Vec<Vec<f32>> = (0..n)
        .map(|c| x.column(c).into_iter().map(|h| h.to_f32()).collect())
        .collect();

    let mut out = vec![0.0f32; rows * n];
    out.par_chunks_mut(n).enumerate().for_each(|(r, y_row)| {
        for (y, col) in y_row.iter_mut().zip(&columns) {
            let mut acc = 0.0f32;
            for s in 0..segs {
                let xs = &col[s * v..(s + 1) * v];
                let mut seg = 0.0f32;
                for (plane, book) in planes.iter().zip(&books) {
                    let code = plane.at(r, s) as usize;
                    let centroid = &book[code * v..(code + 1) * v];
                    let mut dot = 0.0f32;
                    for (&c, &xv) in centroid.iter().zip(xs) {
                        dot += c * xv;
                    }
                    seg += dot;
                }
                acc += scales[r * segs + s] * seg;
            }
            *y = acc;
        }
    });

    let counters = OpCounters {
        mac_dense: (rows * n * q.cols()) as u64,
        ..Default::default()
    };
    Ok((Matrix::from_vec(rows, n, out)?, counters))
}
