// Exact bits-per-weight accounting, and a search for every configuration
// that lands near 2 bits on a 4096 x 4096 layer.

use codegemm::accounting::{bit_breakdown, enumerate_configs, ConfigRanges};
use codegemm::quantizer::{Group, Scheme};

pub fn run_example() -> codegemm::Result<usize> {
    for (v, m, g) in [(4, 1, Group::Row), (8, 2, Group::Row), (8, 1, Group::Size(16)), (16, 3, Group::Size(32))] {
        let scheme = Scheme::new(v, m, 8, g)?;
        let r = bit_breakdown(&scheme, 4096, 4096)?.report();
        println!(
            "{scheme}: code {:.3} + codebook {:.3} + norm {:.3} = {:.3} bits",
            r.q_code, r.q_codebook, r.q_norm, r.q_bar
        );
    }
    let hits = enumerate_configs(2.0, 0.02, 4096, 4096, &ConfigRanges::default());
    for (scheme, bits) in hits.iter().take(8) {
        println!("  {scheme} -> {:.4}", bits.q_bar_f64());
    }
    println!("{} configurations within 0.02 of 2 bits", hits.len());
    Ok(hits.len())
}

fn main() -> codegemm::Result<()> {
    run_example().map(|_| ())
}
