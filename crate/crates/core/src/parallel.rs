//! Deterministic parallelism helpers.
//!
//! Per-path work is mapped into an index-ordered buffer and reduced with a
//! fixed-shape pairwise tree, so results are bitwise identical at any thread
//! count. All ensemble code in this crate goes through these helpers.

use rayon::prelude::*;

/// Map f over 0..m in parallel, preserving index order.
pub fn par_map_indexed<T: Send>(m: usize, f: impl Fn(usize) -> T + Sync + Send) -> Vec<T> {
    (0..m).into_par_iter().map(f).collect()
}

/// Pairwise tree sum with a fixed block shape, independent of thread count.
pub fn tree_sum(xs: &[f64]) -> f64 {
    const BLOCK: usize = 128;
    if xs.len() <= BLOCK {
        return xs.iter().sum();
    }
    let mid = {
        // split at the largest power-of-two block multiple below len
        let half = xs.len() / 2;
        let rem = half % BLOCK;
        (half - rem).max(BLOCK)
    };
    tree_sum(&xs[..mid]) + tree_sum(&xs[mid..])
}

pub fn mean(xs: &[f64]) -> f64 {
    tree_sum(xs) / xs.len() as f64
}

/// (mean, standard error of the mean).
pub fn mean_and_se(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let m = mean(xs);
    if xs.len() < 2 {
        return (m, 0.0);
    }
    let sq: Vec<f64> = xs.iter().map(|x| (x - m) * (x - m)).collect();
    let var = tree_sum(&sq) / (n - 1.0);
    (m, (var / n).sqrt())
}

/// Unbiased sample variance and its own standard error (normal approximation).
pub fn variance_and_se(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let m = mean(xs);
    let sq: Vec<f64> = xs.iter().map(|x| (x - m) * (x - m)).collect();
    let var = tree_sum(&sq) / (n - 1.0);
    // Var(s^2) ~ (mu4 - var^2) / n
    let quads: Vec<f64> = xs.iter().map(|x| (x - m).powi(4)).collect();
    let mu4 = tree_sum(&quads) / n;
    let se = ((mu4 - var * var).max(0.0) / n).sqrt();
    (var, se)
}

/// Run f inside a dedicated rayon pool with the given thread count.
pub fn with_threads<T: Send>(threads: usize, f: impl FnOnce() -> T + Send) -> T {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .expect("thread pool");
    pool.install(f)
}
