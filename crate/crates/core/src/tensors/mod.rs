//! Binary16 storage, dense matrices and the `CGT1` tensor file.

mod half;
mod io;
mod matrix;

pub use self::half::{f16_decode, f16_encode, Half, CANONICAL_NAN};
pub use self::io::{
    decode_tensor, encode_tensor, load_tensor, save_tensor, TENSOR_HEADER_LEN, TENSOR_MAGIC,
    TENSOR_VERSION,
};
pub use self::matrix::Matrix;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

/// Seeded standard-normal matrix scaled by `std`, rounded to binary16.
pub fn gaussian_matrix(rows: usize, cols: usize, std: f64, seed: u64) -> crate::Result<Matrix<Half>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let data: Vec<Half> = (0..rows * cols)
        .map(|_| {
            let z: f64 = StandardNormal.sample(&mut rng);
            Half::from_f64(z * std)
        })
        .collect();
    Matrix::from_vec(rows, cols, data)
}
