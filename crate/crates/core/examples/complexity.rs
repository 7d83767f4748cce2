// Predicted build and read costs for a GEMV, checked against the counters
// the engine actually reports.

use codegemm::accounting::{aqlm_codebook_bytes, predict_complexity};
use codegemm::engines::{codegemm_gemm, phase_split, TileConfig};
use codegemm::quantizer::{synthetic_layer, Group, Scheme};
use codegemm::tensors::gaussian_matrix;

pub fn run_example() -> codegemm::Result<f64> {
    let (rows, cols, n) = (1024, 2048, 1);
    let scheme = Scheme::new(4, 1, 8, Group::Size(128))?;
    let tiles = TileConfig::default();
    let p = predict_complexity(&scheme, rows, n, cols, tiles.tw)?;
    println!("{:#?}", p.report());

    let q = synthetic_layer(rows, cols, scheme, 9)?;
    let x = gaussian_matrix(cols, n, 1.0, 10)?;
    let (_, c) = codegemm_gemm(&q, &x, tiles)?;
    assert_eq!(c.mac_build as u128, p.c_build);
    assert_eq!(c.mac_read_adds as u128, p.c_read);
    let (build, read) = phase_split(&c)?;
    println!("build {build:.3} / read {read:.3} of engine work");
    println!("a 1x16 codebook of 8-vectors needs {} bytes", aqlm_codebook_bytes(1, 16, 8)?);
    Ok(build)
}

fn main() -> codegemm::Result<()> {
    run_example().map(|_| ())
}
