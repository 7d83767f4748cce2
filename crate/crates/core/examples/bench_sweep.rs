// A small timing sweep over tile sizes, written as CSV to stdout.

use codegemm::bench::{run_bench, write_csv, BenchOptions, BenchShape, Engine};
use codegemm::engines::TileConfig;
use codegemm::quantizer::{Group, Scheme};

pub fn run_example() -> codegemm::Result<usize> {
    let shapes = [BenchShape::new("small", 1, 512, 1024, 1), BenchShape::new("batch4", 4, 512, 1024, 1)];
    let opts = BenchOptions {
        engines: vec![Engine::Codegemm, Engine::Dequant, Engine::Dense],
        scheme: Scheme::new(4, 1, 8, Group::Size(128))?,
        tiles: vec![TileConfig::new(32, 256), TileConfig::new(128, 256)],
        repeats: 3,
        warmup: 1,
        seed: 0,
        threads: 2,
    };
    let records = run_bench(&shapes, &opts)?;
    write_csv(&records, std::io::stdout().lock())?;
    Ok(records.len())
}

fn main() -> codegemm::Result<()> {
    run_example().map(|_| ())
}
