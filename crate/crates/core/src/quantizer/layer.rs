use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::quantizer::kmeans::{kmeans_fit, nearest};
use crate::quantizer::{compute_scales, CodePlane, QuantConfig, ScalePlane, Scheme};
use crate::tensors::{Half, Matrix};

/// `2^b` centroids of length `v`, stored as binary16.
#[derive(Clone, Debug, PartialEq)]
pub struct Codebook {
    v: usize,
    entries: Vec<Half>,
}

impl Codebook {
    pub fn new(v: usize, bits: u32, entries: Vec<Half>) -> Result<Self> {
        let expected = (1usize << bits) * v;
        if entries.len() != expected {
            return Err(Error::InvalidLayer(format!(
                "codebook needs {expected} values (2^{bits} x {v}), got {}",
                entries.len()
            )));
        }
        if entries.iter().any(|h| !h.is_finite()) {
            return Err(Error::InvalidLayer("codebook contains a non-finite value".into()));
        }
        Ok(Codebook { v, entries })
    }

    pub fn v(&self) -> usize {
        self.v
    }

    pub fn len(&self) -> usize {
        self.entries.len() / self.v
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn entries(&self) -> &[Half] {
        &self.entries
    }

    pub fn centroid(&self, code: usize) -> &[Half] {
        &self.entries[code * self.v..(code + 1) * self.v]
    }

    /// All entries widened to `f32`, same layout.
    pub fn widened(&self) -> Vec<f32> {
        self.entries.iter().map(|h| h.to_f32()).collect()
    }
}

/// Compressed form of one `rows x cols` weight matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct QuantizedLayer {
    rows: usize,
    cols: usize,
    scheme: Scheme,
    seed: u64,
    scales: ScalePlane,
    planes: Vec<CodePlane>,
    books: Vec<Codebook>,
}

impl QuantizedLayer {
    /// Assemble a layer, checking every structural invariant.
    pub fn from_parts(
        rows: usize,
        cols: usize,
        scheme: Scheme,
        seed: u64,
        scales: ScalePlane,
        planes: Vec<CodePlane>,
        books: Vec<Codebook>,
    ) -> Result<Self> {
        scheme.check_dims(rows, cols)?;
        let gw = scheme.g.width(cols);
        if scales.matrix().shape() != (rows, cols / gw) || scales.group_width() != gw {
            return Err(Error::InvalidLayer(format!(
                "scale plane is {:?} with group width {}, expected {:?} with {gw}",
                scales.matrix().shape(),
                scales.group_width(),
                (rows, cols / gw)
            )));
        }
        if planes.len() != scheme.m || books.len() != scheme.m {
            return Err(Error::InvalidLayer(format!(
                "expected {} planes and codebooks, got {} and {}",
                scheme.m,
                planes.len(),
                books.len()
            )));
        }
        for p in &planes {
            if (p.rows(), p.cols()) != (rows, cols / scheme.v) {
                return Err(Error::InvalidLayer("code plane has the wrong shape".into()));
            }
            p.check_bits(scheme.b)?;
        }
        for book in &books {
            if book.v() != scheme.v || book.len() != scheme.codebook_len() {
                return Err(Error::InvalidLayer("codebook has the wrong shape".into()));
            }
        }
        Ok(QuantizedLayer {
            rows,
            cols,
            scheme,
            seed,
            scales,
            planes,
            books,
        })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn scheme(&self) -> Scheme {
        self.scheme
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn scales(&self) -> &ScalePlane {
        &self.scales
    }

    pub fn planes(&self) -> &[CodePlane] {
        &self.planes
    }

    pub fn books(&self) -> &[Codebook] {
        &self.books
    }

    /// Number of length-`v` segments per row.
    pub fn segments(&self) -> usize {
        self.cols / self.scheme.v
    }

    /// Bitwise equality, including the sign of zero in every binary16 field.
    pub fn bits_eq(&self, other: &Self) -> bool {
        self.rows == other.rows
            && self.cols == other.cols
            && self.scheme == other.scheme
            && self.seed == other.seed
            && self.scales.matrix().bits_eq(other.scales.matrix())
            && self.planes == other.planes
            && self.books.len() == other.books.len()
            && self
                .books
                .iter()
                .zip(&other.books)
                .all(|(a, b)| a.entries.iter().zip(&b.entries).all(|(x, y)| x.to_bits() == y.to_bits()))
    }
}

/// Split a row-major matrix into its length-`v` row vectors, row by row.
pub fn partition_vectors<T: Copy>(m: &Matrix<T>, v: usize) -> Result<Vec<Vec<T>>> {
    if v == 0 || m.cols() % v != 0 {
        return Err(Error::Config(format!("K = {} is not divisible by v = {v}", m.cols())));
    }
    Ok(m.as_slice().chunks_exact(v).map(<[T]>::to_vec).collect())
}

/// Residual energy (sum of squares, normalized domain) before and after each
/// codebook stage. `stage_sse[0]` is the energy of the normalized weights.
#[derive(Clone, Debug, PartialEq)]
pub struct QuantReport {
    pub stage_sse: Vec<f64>,
}

const RESIDUAL_SLACK: f64 = 1e-9;

pub fn quantize_layer(w: &Matrix<Half>, cfg: &QuantConfig) -> Result<QuantizedLayer> {
    quantize_layer_with_report(w, cfg).map(|(q, _)| q)
}

/// Greedy residual quantization: normalize by group scales, then fit one
/// codebook per stage on what the previous stages left over.
pub fn quantize_layer_with_report(w: &Matrix<Half>, cfg: &QuantConfig) -> Result<(QuantizedLayer, QuantReport)> {
    let scheme = cfg.scheme;
    let (rows, cols) = w.shape();
    scheme.check_dims(rows, cols)?;
    let scales = compute_scales(w, scheme.g)?;
    let v = scheme.v;
    let k = scheme.codebook_len();

    let mut residual: Vec<f64> = w
        .as_slice()
        .par_chunks_exact(cols)
        .enumerate()
        .flat_map_iter(|(r, row)| {
            let scales = &scales;
            row.iter()
                .enumerate()
                .map(move |(c, x)| x.to_f64() / scales.at(r, c).to_f64())
        })
        .collect();

    let energy = |res: &[f64]| res.iter().map(|x| x * x).sum::<f64>();
    let mut stage_sse = vec![energy(&residual)];
    let mut planes = Vec::with_capacity(scheme.m);
    let mut books = Vec::with_capacity(scheme.m);

    for stage in 1..=scheme.m {
        let fit = kmeans_fit(&residual, v, k, cfg.seed ^ stage as u64, cfg.kmeans_iters)?;
        let stored: Vec<Half> = fit.centroids.iter().map(|&c| Half::from_f64(c)).collect();
        let effective: Vec<f64> = stored.iter().map(|h| h.to_f64()).collect();

        let codes: Vec<u16> = residual
            .par_chunks_exact_mut(v)
            .with_min_len(256)
            .map(|point| {
                let (code, _) = nearest(point, &effective, v);
                for (x, c) in point.iter_mut().zip(&effective[code * v..(code + 1) * v]) {
                    *x -= c;
                }
                code as u16
            })
            .collect();

        let sse = energy(&residual);
        let before = *stage_sse.last().unwrap();
        if sse > before * (1.0 + RESIDUAL_SLACK) {
            return Err(Error::ResidualIncrease {
                stage,
                before,
                after: sse,
            });
        }
        stage_sse.push(sse);
        planes.push(CodePlane::new(rows, cols / v, codes)?);
        books.push(Codebook::new(v, scheme.b, stored)?);
    }

    let layer = QuantizedLayer::from_parts(rows, cols, scheme, cfg.seed, scales, planes, books)?;
    Ok((layer, QuantReport { stage_sse }))
}

/// Decode codes back to weights: `scale * sum_t books[t][code_t]`, in `f32`,
/// rounded to binary16.
pub fn reconstruct(q: &QuantizedLayer) -> Matrix<Half> {
    let v = q.scheme.v;
    let books: Vec<Vec<f32>> = q.books.iter().map(Codebook::widened).collect();
    let data: Vec<Half> = (0..q.rows)
        .into_par_iter()
        .flat_map_iter(|r| {
            let mut row = Vec::with_capacity(q.cols);
            for s in 0..q.segments() {
                let scale = q.scales.at(r, s * v).to_f32();
                for k in 0..v {
                    let mut sum = 0.0f32;
                    for (plane, book) in q.planes.iter().zip(&books) {
                        sum += book[plane.at(r, s) as usize * v + k];
                    }
                    row.push(Half::from_f32(scale * sum));
                }
            }
            row
        })
        .collect();
    Matrix::from_vec(q.rows, q.cols, data).expect("layer dims are validated")
}

/// `||W - W_hat||_F / ||W||_F`, in `f64`.
pub fn quant_error(w: &Matrix<Half>, w_hat: &Matrix<Half>) -> Result<f64> {
    if w.shape() != w_hat.shape() {
        return Err(Error::Shape(format!("{:?} vs {:?}", w.shape(), w_hat.shape())));
    }
    let (mut num, mut den) = (0.0f64, 0.0f64);
    for (a, b) in w.as_slice().iter().zip(w_hat.as_slice()) {
        let (a, b) = (a.to_f64(), b.to_f64());
        num += (a - b) * (a - b);
        den += a * a;
    }
    if den == 0.0 {
        return Err(Error::ZeroNorm);
    }
    Ok((num / den).sqrt())
}

/// Random but structurally valid layer: uniform codes, Gaussian codebooks,
/// scales in `[0.01, 0.05)`. Engine cost does not depend on weight values,
/// so this stands in for fitted layers at benchmark sizes.
pub fn synthetic_layer(rows: usize, cols: usize, scheme: Scheme, seed: u64) -> Result<QuantizedLayer> {
    scheme.check_dims(rows, cols)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let gw = scheme.g.width(cols);
    let scale_data: Vec<Half> = (0..rows * (cols / gw))
        .map(|_| Half::from_f64(rng.gen_range(0.01..0.05)))
        .collect();
    let scales = ScalePlane::new(Matrix::from_vec(rows, cols / gw, scale_data)?, gw)?;
    let limit = 1u32 << scheme.b;
    let spread = 1.0 / (scheme.m as f64).sqrt();
    let mut planes = Vec::with_capacity(scheme.m);
    let mut books = Vec::with_capacity(scheme.m);
    for _ in 0..scheme.m {
        let entries = (0..scheme.codebook_len() * scheme.v)
            .map(|_| {
                let z: f64 = StandardNormal.sample(&mut rng);
                Half::from_f64(z * spread)
            })
            .collect();
        books.push(Codebook::new(scheme.v, scheme.b, entries)?);
        let codes = (0..rows * (cols / scheme.v))
            .map(|_| rng.gen_range(0..limit) as u16)
            .collect();
        planes.push(CodePlane::new(rows, cols / scheme.v, codes)?);
    }
    QuantizedLayer::from_parts(rows, cols, scheme, seed, scales, planes, books)
}
