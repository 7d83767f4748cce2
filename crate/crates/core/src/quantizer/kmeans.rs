//! Lloyd's k-means with k-means++ seeding.
//!
//! Everything here is deterministic for a given seed: the assignment step
//! runs in parallel but each point is independent, and all reductions walk
//! the points in index order.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};

/// Relative slack allowed when checking that the objective never grows.
/// Centroid means are rounded to `f64`, so a converged update can move the
/// objective by a few ulps.
const OBJECTIVE_SLACK: f64 = 1e-9;

#[derive(Clone, Debug)]
pub struct KMeansFit {
    pub dim: usize,
    /// `k * dim` values, centroid `i` at `[i*dim .. (i+1)*dim)`.
    pub centroids: Vec<f64>,
    pub assignments: Vec<u32>,
    /// Within-cluster sum of squares for the returned centroids/assignments.
    pub sse: f64,
    /// Lloyd iterations actually run.
    pub iterations: usize,
    /// Objective after every assignment and update step, in order.
    pub trace: Vec<f64>,
}

impl KMeansFit {
    pub fn k(&self) -> usize {
        self.centroids.len() / self.dim
    }

    pub fn centroid(&self, i: usize) -> &[f64] {
        &self.centroids[i * self.dim..(i + 1) * self.dim]
    }
}

#[inline]
pub(crate) fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    let mut acc = 0.0;
    for (x, y) in a.iter().zip(b) {
        let d = x - y;
        acc += d * d;
    }
    acc
}

/// Index and squared distance of the closest centroid; ties go to the
/// lowest index.
#[inline]
pub fn nearest(point: &[f64], centroids: &[f64], dim: usize) -> (usize, f64) {
    let mut best = (0, f64::INFINITY);
    for (i, c) in centroids.chunks_exact(dim).enumerate() {
        let d = sq_dist(point, c);
        if d < best.1 {
            best = (i, d);
        }
    }
    best
}

fn assign(points: &[f64], centroids: &[f64], dim: usize, out: &mut [u32]) {
    out.par_iter_mut()
        .zip(points.par_chunks_exact(dim))
        .with_min_len(256)
        .for_each(|(a, p)| *a = nearest(p, centroids, dim).0 as u32);
}

fn objective(points: &[f64], centroids: &[f64], dim: usize, assignments: &[u32]) -> f64 {
    point_costs(points, centroids, dim, assignments).iter().sum()
}

fn point_costs(points: &[f64], centroids: &[f64], dim: usize, assignments: &[u32]) -> Vec<f64> {
    points
        .par_chunks_exact(dim)
        .zip(assignments.par_iter())
        .with_min_len(256)
        .map(|(p, &a)| sq_dist(p, &centroids[a as usize * dim..(a as usize + 1) * dim]))
        .collect()
}

fn plus_plus_init(points: &[f64], dim: usize, k: usize, rng: &mut ChaCha8Rng) -> Vec<f64> {
    let n = points.len() / dim;
    let point = |i: usize| &points[i * dim..(i + 1) * dim];
    let mut centroids = Vec::with_capacity(k * dim);
    let first = rng.gen_range(0..n);
    centroids.extend_from_slice(point(first));
    let mut d2: Vec<f64> = points.par_chunks_exact(dim).map(|p| sq_dist(p, point(first))).collect();

    for _ in 1..k {
        let total: f64 = d2.iter().sum();
        let pick = if total > 0.0 {
            let target = rng.gen::<f64>() * total;
            let mut cum = 0.0;
            let mut chosen = None;
            for (i, &w) in d2.iter().enumerate() {
                if w <= 0.0 {
                    continue;
                }
                cum += w;
                chosen = Some(i);
                if cum > target {
                    break;
                }
            }
            chosen.unwrap_or(0)
        } else {
            rng.gen_range(0..n)
        };
        let c = point(pick);
        centroids.extend_from_slice(c);
        d2.par_iter_mut()
            .zip(points.par_chunks_exact(dim))
            .with_min_len(256)
            .for_each(|(d, p)| *d = d.min(sq_dist(p, c)));
    }
    centroids
}

/// Recompute centroids as cluster means. Empty clusters are re-seeded to the
/// point currently farthest from its own centroid.
fn update(points: &[f64], dim: usize, k: usize, assignments: &[u32], centroids: &mut [f64]) {
    let mut sums = vec![0.0f64; k * dim];
    let mut counts = vec![0usize; k];
    for (p, &a) in points.chunks_exact(dim).zip(assignments) {
        let a = a as usize;
        counts[a] += 1;
        for (s, x) in sums[a * dim..(a + 1) * dim].iter_mut().zip(p) {
            *s += x;
        }
    }
    for c in 0..k {
        if counts[c] > 0 {
            let n = counts[c] as f64;
            for (dst, s) in centroids[c * dim..(c + 1) * dim].iter_mut().zip(&sums[c * dim..]) {
                *dst = s / n;
            }
        }
    }
    if counts.iter().all(|&c| c > 0) {
        return;
    }
    let mut costs = point_costs(points, centroids, dim, assignments);
    for c in 0..k {
        if counts[c] > 0 {
            continue;
        }
        let (far, _) = costs
            .iter()
            .enumerate()
            .fold((0, f64::NEG_INFINITY), |best, (i, &d)| if d > best.1 { (i, d) } else { best });
        centroids[c * dim..(c + 1) * dim].copy_from_slice(&points[far * dim..(far + 1) * dim]);
        costs[far] = 0.0;
    }
}

fn check_non_increasing(trace: &[f64]) {
    if let [.., prev, last] = trace {
        assert!(
            *last <= prev * (1.0 + OBJECTIVE_SLACK) + f64::MIN_POSITIVE,
            "k-means objective increased: {prev} -> {last}"
        );
    }
}

/// Cluster `points` (flat, `dim` values each) into `k` groups.
///
/// Stops after `iters` Lloyd iterations or once assignments stop changing.
/// The returned assignments are always nearest-centroid for the returned
/// centroids.
pub fn kmeans_fit(points: &[f64], dim: usize, k: usize, seed: u64, iters: usize) -> Result<KMeansFit> {
    if dim == 0 || points.is_empty() {
        return Err(Error::EmptyPointSet);
    }
    if points.len() % dim != 0 {
        return Err(Error::Shape(format!(
            "{} values do not form points of length {dim}",
            points.len()
        )));
    }
    if k == 0 {
        return Err(Error::Config("k must be >= 1".into()));
    }
    let n = points.len() / dim;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut centroids = plus_plus_init(points, dim, k, &mut rng);
    let mut assignments = vec![0u32; n];
    assign(points, &centroids, dim, &mut assignments);
    let mut trace = vec![objective(points, &centroids, dim, &assignments)];

    let mut next = vec![0u32; n];
    let mut iterations = 0;
    for _ in 0..iters {
        iterations += 1;
        update(points, dim, k, &assignments, &mut centroids);
        trace.push(objective(points, &centroids, dim, &assignments));
        check_non_increasing(&trace);

        assign(points, &centroids, dim, &mut next);
        trace.push(objective(points, &centroids, dim, &next));
        check_non_increasing(&trace);

        let changed = next != assignments;
        std::mem::swap(&mut next, &mut assignments);
        if !changed {
            break;
        }
    }

    Ok(KMeansFit {
        dim,
        sse: *trace.last().unwrap(),
        centroids,
        assignments,
        iterations,
        trace,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand_distr::{Distribution, StandardNormal};

    /// Optimal SSE over every assignment of `n` points to at most `k`
    /// clusters, each cluster represented by its mean.
    fn brute_force_sse(points: &[f64], dim: usize, k: usize) -> f64 {
        let n = points.len() / dim;
        let mut labels = vec![0usize; n];
        let mut best = f64::INFINITY;
        loop {
            let mut sse = 0.0;
            for c in 0..k {
                let members: Vec<&[f64]> = (0..n)
                    .filter(|&i| labels[i] == c)
                    .map(|i| &points[i * dim..(i + 1) * dim])
                    .collect();
                if members.is_empty() {
                    continue;
                }
                let mean: Vec<f64> = (0..dim)
                    .map(|d| members.iter().map(|p| p[d]).sum::<f64>() / members.len() as f64)
                    .collect();
                sse += members.iter().map(|p| sq_dist(p, &mean)).sum::<f64>();
            }
            best = best.min(sse);
            // next label vector (base-k counter)
            let mut i = 0;
            loop {
                if i == n {
                    return best;
                }
                labels[i] += 1;
                if labels[i] < k {
                    break;
                }
                labels[i] = 0;
                i += 1;
            }
        }
    }

    fn random_points(n: usize, dim: usize, seed: u64) -> Vec<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..n * dim).map(|_| StandardNormal.sample(&mut rng)).collect()
    }

    fn assert_nearest(fit: &KMeansFit, points: &[f64]) {
        for (p, &a) in points.chunks_exact(fit.dim).zip(&fit.assignments) {
            let own = sq_dist(p, fit.centroid(a as usize));
            for c in 0..fit.k() {
                assert!(own <= sq_dist(p, fit.centroid(c)));
            }
        }
    }

    #[test]
    fn separable_1d() {
        let pts = [0.0, 0.0, 10.0, 10.0];
        let fit = kmeans_fit(&pts, 1, 2, 7, 25).unwrap();
        let mut cs = fit.centroids.clone();
        cs.sort_by(f64::total_cmp);
        assert_eq!(cs, vec![0.0, 10.0]);
        assert_eq!(fit.sse, 0.0);
    }

    #[test]
    fn identical_points() {
        let pts = vec![1.5; 3 * 5];
        for k in 1..=4 {
            let fit = kmeans_fit(&pts, 3, k, 1, 10).unwrap();
            assert_eq!(fit.sse, 0.0);
            assert_eq!(fit.k(), k);
        }
    }

    #[test]
    fn empty_set() {
        assert!(matches!(kmeans_fit(&[], 2, 2, 0, 5), Err(Error::EmptyPointSet)));
    }

    #[test]
    fn eight_points_vs_exhaustive() {
        for seed in 0..5 {
            let pts = random_points(8, 2, 100 + seed);
            let fit = kmeans_fit(&pts, 2, 2, seed, 50).unwrap();
            let opt = brute_force_sse(&pts, 2, 2);
            assert!(fit.sse >= opt - 1e-12, "sse {} < optimum {opt}", fit.sse);
            assert_nearest(&fit, &pts);
        }
    }

    #[test]
    fn objective_trace_is_monotone() {
        let pts = random_points(500, 4, 3);
        let fit = kmeans_fit(&pts, 4, 16, 9, 30).unwrap();
        for w in fit.trace.windows(2) {
            assert!(w[1] <= w[0] * (1.0 + OBJECTIVE_SLACK));
        }
        assert_nearest(&fit, &pts);
    }

    #[test]
    fn more_clusters_than_points() {
        let pts = [0.0, 1.0, 2.0];
        let fit = kmeans_fit(&pts, 1, 8, 4, 10).unwrap();
        assert_eq!(fit.sse, 0.0);
        assert_eq!(fit.k(), 8);
    }

    #[test]
    fn deterministic_across_pool_sizes() {
        let pts = random_points(3000, 2, 11);
        let run = |threads| {
            rayon::ThreadPoolBuilder::new()
                .num_threads(threads)
                .build()
                .unwrap()
                .install(|| kmeans_fit(&pts, 2, 32, 5, 20).unwrap())
        };
        let (a, b) = (run(1), run(4));
        assert_eq!(a.assignments, b.assignments);
        assert_eq!(
            a.centroids.iter().map(|x| x.to_bits()).collect::<Vec<_>>(),
            b.centroids.iter().map(|x| x.to_bits()).collect::<Vec<_>>()
        );
    }
}
