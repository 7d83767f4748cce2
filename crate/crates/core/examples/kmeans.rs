// Seeded k-means on three well separated blobs.

use codegemm::quantizer::kmeans_fit;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn run_example() -> codegemm::Result<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let centers = [(-4.0, 0.0), (0.0, 4.0), (4.0, 0.0)];
    let mut points = Vec::new();
    for i in 0..300 {
        let (cx, cy) = centers[i % 3];
        points.push(cx + rng.gen_range(-0.5..0.5));
        points.push(cy + rng.gen_range(-0.5..0.5));
    }
    let fit = kmeans_fit(&points, 2, 3, 1, 25)?;
    for c in 0..fit.k() {
        println!("centroid {c}: {:?}", fit.centroid(c));
    }
    println!("sse {:.3} after {} iterations, trace {:?}", fit.sse, fit.iterations, fit.trace);
    assert!(fit.trace.windows(2).all(|p| p[1] <= p[0]));
    Ok(fit.sse)
}

fn main() -> codegemm::Result<()> {
    run_example().map(|_| ())
}
