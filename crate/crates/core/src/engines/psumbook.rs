use crate::error::{Error, Result};
use crate::quantizer::Codebook;

/// Every inner product between a codebook centroid and a length-`v` input
/// segment, for one K-tile of one input column.
///
/// Entry `(t, j, i)` is `sum_k c[t][i][k] * x[j*v + k]`, accumulated in
/// `f32` with `k` ascending.
#[derive(Clone, Debug, PartialEq)]
pub struct Psumbook {
    books: usize,
    segments: usize,
    codes: usize,
    data: Vec<f32>,
}

impl Psumbook {
    /// Build from codebooks already widened to `f32`. Returns the table and
    /// the number of multiply-accumulates spent.
    pub(crate) fn build_wide(x_tile: &[f32], books: &[Vec<f32>], v: usize, codes: usize) -> (Self, u64) {
        let segments = x_tile.len() / v;
        let mut data = Vec::with_capacity(books.len() * segments * codes);
        let mut macs = 0u64;
        for book in books {
            for seg in x_tile.chunks_exact(v) {
                for centroid in book.chunks_exact(v) {
                    let mut acc = 0.0f32;
                    for (&c, &x) in centroid.iter().zip(seg) {
                        acc += c * x;
                        macs += 1;
                    }
                    data.push(acc);
                }
            }
        }
        let table = Psumbook {
            books: books.len(),
            segments,
            codes,
            data,
        };
        (table, macs)
    }

    #[inline]
    pub fn get(&self, book: usize, segment: usize, code: usize) -> f32 {
        self.data[(book * self.segments + segment) * self.codes + code]
    }

    /// Table for codebook `book`, segment `segment`: one entry per code.
    #[inline]
    pub fn row(&self, book: usize, segment: usize) -> &[f32] {
        let start = (book * self.segments + segment) * self.codes;
        &self.data[start..start + self.codes]
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn segments(&self) -> usize {
        self.segments
    }

    pub fn books(&self) -> usize {
        self.books
    }
}

/// Build the Psumbook for one input tile (`t_w` values of one column).
pub fn build_psumbook(x_tile: &[f32], books: &[Codebook]) -> Result<(Psumbook, u64)> {
    let first = books
        .first()
        .ok_or_else(|| Error::Config("at least one codebook is required".into()))?;
    let v = first.v();
    if books.iter().any(|b| b.v() != v || b.len() != first.len()) {
        return Err(Error::Config("codebooks disagree on shape".into()));
    }
    if x_tile.is_empty() || x_tile.len() % v != 0 {
        return Err(Error::Config(format!(
            "tile width {} is not a positive multiple of v = {v}",
            x_tile.len()
        )));
    }
    let wide: Vec<Vec<f32>> = books.iter().map(Codebook::widened).collect();
    Ok(Psumbook::build_wide(x_tile, &wide, v, first.len()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tensors::Half;

    fn book(v: usize, bits: u32, vals: &[f64]) -> Codebook {
        Codebook::new(v, bits, vals.iter().map(|&x| Half::from_f64(x)).collect()).unwrap()
    }

    #[test]
    fn small_codebook() {
        let b = book(2, 2, &[1.0, 0.0, 0.0, 1.0, 1.0, 1.0, -1.0, -1.0]);
        let (p, macs) = build_psumbook(&[2.0, 3.0], &[b]).unwrap();
        assert_eq!(p.row(0, 0), &[2.0, 3.0, 5.0, -5.0]);
        assert_eq!(macs, 4 * 2);
    }

    #[test]
    fn unit_centroids_select_elements() {
        // 4 codes of length 4, code i = e_i
        let mut vals = vec![0.0; 16];
        for i in 0..4 {
            vals[i * 4 + i] = 1.0;
        }
        let b = book(4, 2, &vals);
        let x = [0.5, -1.5, 2.25, 8.0, 1.0, 2.0, 3.0, 4.0];
        let (p, _) = build_psumbook(&x, &[b]).unwrap();
        for j in 0..2 {
            for k in 0..4 {
                assert_eq!(p.get(0, j, k), x[j * 4 + k]);
            }
        }
    }

    #[test]
    fn zero_input() {
        let b = book(2, 1, &[1.0, 2.0, -3.0, 4.0]);
        let (p, _) = build_psumbook(&[0.0; 6], &[b.clone(), b]).unwrap();
        assert_eq!(p.len(), 2 * 3 * 2);
        assert!(p.data.iter().all(|&e| e == 0.0));
    }

    #[test]
    fn entry_count_and_macs() {
        // m = 2, b = 3, v = 4, t_w = 16: entries m * 2^b * t_w / v, MACs m * 2^b * t_w
        let b = book(4, 3, &[0.5; 32]);
        let (p, macs) = build_psumbook(&[1.0; 16], &[b.clone(), b]).unwrap();
        assert_eq!(p.len(), 2 * 8 * 16 / 4);
        assert_eq!(macs, 2 * 8 * 16);
    }

    #[test]
    fn ragged_tile() {
        let b = book(4, 1, &[0.0; 8]);
        assert!(build_psumbook(&[1.0; 6], &[b]).is_err());
    }
}
