// Write a quantized layer to disk and load it back.

use codegemm::accounting::bit_breakdown;
use codegemm::quantizer::{quantize_layer, Group, QuantConfig, Scheme};
use codegemm::storage::{deserialize, payload_stats, serialize, LAYER_HEADER_LEN};
use codegemm::tensors::gaussian_matrix;

pub fn run_example() -> codegemm::Result<u64> {
    let w = gaussian_matrix(32, 64, 1.0, 4)?;
    let scheme = Scheme::new(8, 2, 3, Group::Size(16))?;
    let q = quantize_layer(&w, &QuantConfig::new(scheme, 6))?;

    let path = std::env::temp_dir().join(format!("codegemm-example-{}.cgmm", std::process::id()));
    serialize(&q, &path)?;
    let size = std::fs::metadata(&path)?.len();
    let back = deserialize(&path)?;
    std::fs::remove_file(&path)?;
    assert!(back.bits_eq(&q));

    let stats = payload_stats(&q);
    let bits = bit_breakdown(&scheme, 32, 64)?;
    assert_eq!(stats.data_bits(), bits.total_bits);
    println!(
        "{size} bytes: {LAYER_HEADER_LEN} header + {} payload ({} data bits, {} padding)",
        size - LAYER_HEADER_LEN as u64,
        stats.data_bits(),
        stats.padding_bits
    );
    Ok(size)
}

fn main() -> codegemm::Result<()> {
    run_example().map(|_| ())
}
