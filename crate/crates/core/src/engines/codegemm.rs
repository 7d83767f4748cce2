use rayon::prelude::*;

use crate::engines::psumbook::Psumbook;
use crate::engines::{OpCounters, TileConfig};
use crate::error::{Error, Result};
use crate::quantizer::{Codebook, QuantizedLayer};
use crate::tensors::{Half, Matrix};

/// Segment ranges `[start, end)` (in units of `v`) covered by each K-tile.
/// The last tile is narrower when `t_w` does not divide K.
pub(crate) fn tile_segments(cols: usize, v: usize, tw: usize) -> Vec<(usize, usize)> {
    let per_tile = tw / v;
    let total = cols / v;
    (0..total)
        .step_by(per_tile)
        .map(|s| (s, (s + per_tile).min(total)))
        .collect()
}

/// Widened scale for every `(row, segment)`.
pub(crate) fn segment_scales(q: &QuantizedLayer) -> Vec<f32> {
    let v = q.scheme().v;
    let segs = q.segments();
    let mut out = Vec::with_capacity(q.rows() * segs);
    for r in 0..q.rows() {
        for s in 0..segs {
            out.push(q.scales().at(r, s * v).to_f32());
        }
    }
    out
}

pub(crate) fn check_input(q: &QuantizedLayer, x: &Matrix<Half>) -> Result<()> {
    if x.rows() != q.cols() {
        return Err(Error::Shape(format!(
            "layer is {}x{} but X is {}x{}",
            q.rows(),
            q.cols(),
            x.rows(),
            x.cols()
        )));
    }
    Ok(())
}

/// Psumbook GEMM.
///
/// For each input column: build one Psumbook per K-tile (in parallel over
/// tiles), then let row tasks of `t_h` rows gather from the shared tables.
pub fn codegemm_gemm(q: &QuantizedLayer, x: &Matrix<Half>, tiles: TileConfig) -> Result<(Matrix<f32>, OpCounters)> {
    let scheme = q.scheme();
    tiles.validate(&scheme)?;
    check_input(q, x)?;

    let (rows, n) = (q.rows(), x.cols());
    let v = scheme.v;
    let segs = q.segments();
    let codes_per_book = scheme.codebook_len();
    let books: Vec<Vec<f32>> = q.books().iter().map(Codebook::widened).collect();
    let scales = segment_scales(q);
    let ranges = tile_segments(q.cols(), v, tiles.tw);
    let planes = q.planes();

    let mut out = vec![0.0f32; rows * n];
    let mut counters = OpCounters::default();

    for c in 0..n {
        let column: Vec<f32> = x.column(c).into_iter().map(|h| h.to_f32()).collect();

        // build: one table per K-tile
        let built: Vec<(Psumbook, u64)> = ranges
            .par_iter()
            .map(|&(s0, s1)| Psumbook::build_wide(&column[s0 * v..s1 * v], &books, v, codes_per_book))
            .collect();
        for (table, macs) in &built {
            counters.mac_build += macs;
            counters.psumbook_entries = counters.psumbook_entries.max(table.len() as u64);
        }
        let tables: Vec<&Psumbook> = built.iter().map(|(t, _)| t).collect();

        // read: each row task owns a disjoint block of outputs
        let chunks: Vec<(Vec<f32>, u64)> = (0..rows)
            .step_by(tiles.th)
            .collect::<Vec<_>>()
            .into_par_iter()
            .map(|r0| {
                let r1 = (r0 + tiles.th).min(rows);
                let mut ys = Vec::with_capacity(r1 - r0);
                let mut reads = 0u64;
                for r in r0..r1 {
                    let row_scales = &scales[r * segs..(r + 1) * segs];
                    let mut acc = 0.0f32;
                    for (table, &(s0, s1)) in tables.iter().zip(&ranges) {
                        for s in s0..s1 {
                            let j = s - s0;
                            let mut seg = 0.0f32;
                            for (t, plane) in planes.iter().enumerate() {
                                let code = plane.at(r, s) as usize;
                                seg += table.row(t, j)[code];
                                reads += 1;
                            }
                            acc += row_scales[s] * seg;
                        }
                    }
                    ys.push(acc);
                }
                (ys, reads)
            })
            .collect();

        let mut r = 0;
        for (ys, reads) in chunks {
            counters.mac_read_adds += reads;
            counters.lookups += reads;
            for y in ys {
                out[r * n + c] = y;
                r += 1;
            }
        }
    }

    Ok((Matrix::from_vec(rows, n, out)?, counters))
}
