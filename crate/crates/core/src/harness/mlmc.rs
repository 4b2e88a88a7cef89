//! Multilevel Monte Carlo with shared-increment level coupling.

use crate::error::{Result, SimError};
use crate::parallel::{mean_and_se, par_map_indexed, tree_sum};
use crate::rng::RngStream;
use crate::schemes::em::aggregate_increments;
use serde::Serialize;
use std::io::Write;

#[derive(Debug, Clone, Copy, Serialize)]
pub struct MlmcLevel {
    pub level: usize,
    pub n: usize,
    pub mean: f64,
    pub variance: f64,
    pub paths: usize,
    pub diverged: usize,
}

#[derive(Debug, Clone, Serialize)]
pub struct MlmcReport {
    pub levels: Vec<MlmcLevel>,
    pub estimate: f64,
    pub stderr: f64,
    pub seed: u64,
}

impl MlmcReport {
    pub fn write_csv(&self, out: &mut impl Write) -> std::io::Result<()> {
        writeln!(out, "level,n,mean,variance,paths,diverged")?;
        for l in &self.levels {
            writeln!(out, "{},{},{},{},{},{}", l.level, l.n, l.mean, l.variance, l.paths, l.diverged)?;
        }
        Ok(())
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serialization")
    }
}

/// Telescoping estimator over levels n_l = n0 2^l: level 0 averages the
/// payoff at n0, level l >= 1 averages coupled fine-minus-coarse payoff
/// differences with shared increments. One estimator value plus per-level
/// variances; a level that loses every path to divergence fails the run.
#[allow(clippy::too_many_arguments)]
pub fn mlmc_estimate(
    horizon: f64,
    n0: usize,
    num_levels: usize,
    paths_per_level: &[usize],
    seed: u64,
    gen_increments: impl Fn(&mut RngStream, f64, usize) -> Vec<f64> + Sync,
    scheme: impl Fn(usize, &[f64]) -> Result<Vec<f64>> + Sync,
    payoff: impl Fn(&[f64]) -> f64 + Sync,
) -> Result<MlmcReport> {
    if num_levels == 0 || paths_per_level.len() != num_levels {
        return Err(SimError::domain("mlmc_estimate", "need one path budget per level"));
    }
    let mut levels = Vec::with_capacity(num_levels);
    for l in 0..num_levels {
        let n_f = n0 << l;
        let m = paths_per_level[l];
        let diffs: Vec<Option<f64>> = par_map_indexed(m, |i| {
            let mut rng = RngStream::new(seed, ((l as u64) << 40) | i as u64);
            let fine = gen_increments(&mut rng, horizon, n_f);
            let f_fine = match scheme(n_f, &fine) {
                Ok(p) => payoff(&p),
                Err(_) => return None,
            };
            if l == 0 {
                Some(f_fine)
            } else {
                let coarse = aggregate_increments(&fine, 2);
                match scheme(n_f / 2, &coarse) {
                    Ok(p) => Some(f_fine - payoff(&p)),
                    Err(_) => None,
                }
            }
        });
        let vals: Vec<f64> = diffs.iter().flatten().copied().collect();
        if vals.is_empty() {
            return Err(SimError::DivergenceThreshold { diverged: m, total: m, threshold: 1.0 });
        }
        let (mean, _) = mean_and_se(&vals);
        let sq: Vec<f64> = vals.iter().map(|v| (v - mean) * (v - mean)).collect();
        let variance = if vals.len() > 1 { tree_sum(&sq) / (vals.len() as f64 - 1.0) } else { 0.0 };
        levels.push(MlmcLevel { level: l, n: n_f, mean, variance, paths: vals.len(), diverged: m - vals.len() });
    }
    let estimate = tree_sum(&levels.iter().map(|l| l.mean).collect::<Vec<_>>());
    let stderr = levels.iter().map(|l| l.variance / l.paths as f64).sum::<f64>().sqrt();
    Ok(MlmcReport { levels, estimate, stderr, seed })
}

/// Plain single-level Monte Carlo of the same payoff at grid n, for
/// telescoping checks against the multilevel estimator.
pub fn single_level_estimate(
    horizon: f64,
    n: usize,
    m_paths: usize,
    seed: u64,
    gen_increments: impl Fn(&mut RngStream, f64, usize) -> Vec<f64> + Sync,
    scheme: impl Fn(usize, &[f64]) -> Result<Vec<f64>> + Sync,
    payoff: impl Fn(&[f64]) -> f64 + Sync,
) -> Result<(f64, f64)> {
    let vals: Vec<Option<f64>> = par_map_indexed(m_paths, |i| {
        let mut rng = RngStream::new(seed, i as u64);
        let inc = gen_increments(&mut rng, horizon, n);
        scheme(n, &inc).ok().map(|p| payoff(&p))
    });
    let kept: Vec<f64> = vals.iter().flatten().copied().collect();
    if kept.is_empty() {
        return Err(SimError::DivergenceThreshold { diverged: m_paths, total: m_paths, threshold: 1.0 });
    }
    Ok(mean_and_se(&kept))
}
