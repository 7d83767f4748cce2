// Quantize a Gaussian weight matrix with additive codebooks and look at
// how the reconstruction error falls as codebooks are added.

use codegemm::quantizer::{quant_error, quantize_layer_with_report, reconstruct, Group, QuantConfig, Scheme};
use codegemm::tensors::gaussian_matrix;

pub fn run_example() -> codegemm::Result<Vec<f64>> {
    let w = gaussian_matrix(128, 128, 1.0, 11)?;
    let mut errors = Vec::new();
    for m in 1..=3 {
        let scheme = Scheme::new(8, m, 4, Group::Size(32))?;
        let (q, report) = quantize_layer_with_report(&w, &QuantConfig::new(scheme, 5))?;
        let err = quant_error(&w, &reconstruct(&q))?;
        println!("{scheme}: relative error {err:.4}, stage SSE {:?}", report.stage_sse);
        errors.push(err);
    }
    assert!(errors.windows(2).all(|p| p[1] <= p[0]));
    Ok(errors)
}

fn main() -> codegemm::Result<()> {
    run_example().map(|_| ())
}
