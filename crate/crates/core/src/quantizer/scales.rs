use crate::error::{Error, Result};
use crate::quantizer::Group;
use crate::tensors::{Half, Matrix};

/// Per-group normalization scales, `rows x (cols / g_eff)`.
#[derive(Clone, Debug, PartialEq)]
pub struct ScalePlane {
    pub(crate) scales: Matrix<Half>,
    pub(crate) group_width: usize,
}

impl ScalePlane {
    pub fn new(scales: Matrix<Half>, group_width: usize) -> Result<Self> {
        if let Some(bad) = scales.as_slice().iter().find(|s| !(s.is_finite() && s.to_f32() > 0.0)) {
            return Err(Error::InvalidLayer(format!("scale {bad:?} is not finite and positive")));
        }
        Ok(ScalePlane { scales, group_width })
    }

    pub fn matrix(&self) -> &Matrix<Half> {
        &self.scales
    }

    pub fn group_width(&self) -> usize {
        self.group_width
    }

    /// Scale applying to weight column `col` of row `row`.
    #[inline]
    pub fn at(&self, row: usize, col: usize) -> Half {
        self.scales.at(row, col / self.group_width)
    }
}

/// Max-abs scale per group, rounded to binary16; all-zero groups get 1.0.
pub fn compute_scales(w: &Matrix<Half>, g: Group) -> Result<ScalePlane> {
    let width = g.width(w.cols());
    if width == 0 || w.cols() % width != 0 {
        return Err(Error::Config(format!(
            "K = {} is not divisible by group size {width}",
            w.cols()
        )));
    }
    let per_row = w.cols() / width;
    let mut data = Vec::with_capacity(w.rows() * per_row);
    for r in 0..w.rows() {
        for group in w.row(r).chunks_exact(width) {
            let max = group.iter().map(|h| h.to_f64().abs()).fold(0.0f64, f64::max);
            data.push(if max == 0.0 { Half::ONE } else { Half::from_f64(max) });
        }
    }
    ScalePlane::new(Matrix::from_vec(w.rows(), per_row, data)?, width)
}
