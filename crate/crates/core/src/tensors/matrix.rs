use crate::error::{Error, Result};
use crate::tensors::Half;

/// Dense row-major matrix.
///
/// Weights, inputs, scales and codebooks are `Matrix<Half>`; engine outputs
/// are `Matrix<f32>` (or `Matrix<f64>` for reference runs).
#[derive(Clone, Debug, PartialEq)]
pub struct Matrix<T> {
    rows: usize,
    cols: usize,
    data: Vec<T>,
}

impl<T> Matrix<T> {
    pub fn from_vec(rows: usize, cols: usize, data: Vec<T>) -> Result<Self> {
        if rows == 0 || cols == 0 {
            return Err(Error::Shape(format!("matrix dims must be >= 1, got {rows}x{cols}")));
        }
        let len = rows
            .checked_mul(cols)
            .ok_or_else(|| Error::DimOverflow(format!("{rows}x{cols}")))?;
        if data.len() != len {
            return Err(Error::Shape(format!(
                "{rows}x{cols} matrix needs {len} elements, got {}",
                data.len()
            )));
        }
        Ok(Matrix { rows, cols, data })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    pub fn as_slice(&self) -> &[T] {
        &self.data
    }

    pub fn into_vec(self) -> Vec<T> {
        self.data
    }

    pub fn row(&self, r: usize) -> &[T] {
        &self.data[r * self.cols..(r + 1) * self.cols]
    }

    pub fn get(&self, r: usize, c: usize) -> &T {
        &self.data[r * self.cols + c]
    }

    pub fn map<U>(&self, f: impl FnMut(&T) -> U) -> Matrix<U> {
        Matrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(f).collect(),
        }
    }
}

impl<T: Copy> Matrix<T> {
    pub fn filled(rows: usize, cols: usize, value: T) -> Result<Self> {
        let len = rows
            .checked_mul(cols)
            .ok_or_else(|| Error::DimOverflow(format!("{rows}x{cols}")))?;
        Self::from_vec(rows, cols, vec![value; len])
    }

    pub fn at(&self, r: usize, c: usize) -> T {
        self.data[r * self.cols + c]
    }

    /// Column `c` gathered into a contiguous vector.
    pub fn column(&self, c: usize) -> Vec<T> {
        (0..self.rows).map(|r| self.data[r * self.cols + c]).collect()
    }
}

impl Matrix<Half> {
    /// Round every element of an `f32` buffer to binary16.
    pub fn from_f32(rows: usize, cols: usize, data: &[f32]) -> Result<Self> {
        Self::from_vec(rows, cols, data.iter().map(|&x| Half::from_f32(x)).collect())
    }

    pub fn from_f64(rows: usize, cols: usize, data: &[f64]) -> Result<Self> {
        Self::from_vec(rows, cols, data.iter().map(|&x| Half::from_f64(x)).collect())
    }

    pub fn to_f32(&self) -> Matrix<f32> {
        self.map(|h| h.to_f32())
    }

    pub fn to_f64(&self) -> Matrix<f64> {
        self.map(|h| h.to_f64())
    }

    /// Bitwise equality (distinguishes `-0` from `+0` and compares NaN bits).
    pub fn bits_eq(&self, other: &Self) -> bool {
        self.shape() == other.shape()
            && self.data.iter().zip(&other.data).all(|(a, b)| a.to_bits() == b.to_bits())
    }
}

impl Matrix<f32> {
    pub fn to_half(&self) -> Matrix<Half> {
        self.map(|&x| Half::from_f32(x))
    }

    pub fn bits_eq(&self, other: &Self) -> bool {
        self.shape() == other.shape()
            && self.data.iter().zip(&other.data).all(|(a, b)| a.to_bits() == b.to_bits())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_bad_shapes() {
        assert!(Matrix::from_vec(0, 3, Vec::<f32>::new()).is_err());
        assert!(Matrix::from_vec(2, 2, vec![0.0f32; 3]).is_err());
        assert!(Matrix::from_vec(2, 2, vec![0.0f32; 4]).is_ok());
    }

    #[test]
    fn row_major_layout() {
        let m = Matrix::from_vec(2, 3, vec![1, 2, 3, 4, 5, 6]).unwrap();
        assert_eq!(m.row(1), &[4, 5, 6]);
        assert_eq!(m.at(0, 2), 3);
        assert_eq!(m.column(1), vec![2, 5]);
    }
}
