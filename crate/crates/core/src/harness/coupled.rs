//! Strong/weak/functional error estimators with shared-increment coupling:
//! every discretization level of a path sees sums of the same fine increments,
//! so curves are comparable point by point and monotone up to noise.

use crate::bv::BVFunction;
use crate::error::{Result, SimError};
use crate::harness::curves::{CurvePoint, ErrorCurve, ErrorKind};
use crate::parallel::{mean_and_se, par_map_indexed};
use crate::rng::RngStream;
use crate::schemes::em::{aggregate_increments, em_bridge_value, em_cell_max, em_path, EmConfig};
use crate::schemes::discrete_max;

/// Divergence fraction above which a run is considered mis-configured.
pub const DIVERGENCE_FAIL_THRESHOLD: f64 = 0.01;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorMode {
    /// Sup over shared grid nodes of |scheme - reference|.
    Sup,
    /// Terminal-value difference.
    Terminal,
}

fn check_levels(n_list: &[usize], n_ref: usize) -> Result<()> {
    if n_list.is_empty() {
        return Err(SimError::domain("strong_error", "empty level list"));
    }
    if n_list.windows(2).any(|w| w[0] >= w[1]) {
        return Err(SimError::domain("strong_error", "levels must be strictly increasing"));
    }
    for &n in n_list {
        if !n_ref.is_multiple_of(n) {
            return Err(SimError::domain(
                "strong_error",
                format!("reference grid {n_ref} is not a refinement of {n}"),
            ));
        }
    }
    Ok(())
}

fn summarize(
    kind: ErrorKind,
    moment_order: f64,
    n_list: &[usize],
    per_path: Vec<Vec<Option<f64>>>,
    seed: u64,
    scheme_id: &str,
    root: bool,
) -> Result<ErrorCurve> {
    let m = per_path.len();
    let mut points = Vec::with_capacity(n_list.len());
    for (li, &n) in n_list.iter().enumerate() {
        let vals: Vec<f64> = per_path.iter().filter_map(|row| row[li]).collect();
        let diverged = m - vals.len();
        if (diverged as f64) > DIVERGENCE_FAIL_THRESHOLD * m as f64 {
            return Err(SimError::DivergenceThreshold {
                diverged,
                total: m,
                threshold: DIVERGENCE_FAIL_THRESHOLD,
            });
        }
        let (mean, se) = mean_and_se(&vals);
        let (error, stderr) = if root && moment_order != 1.0 {
            if mean <= 0.0 {
                (0.0, 0.0)
            } else {
                let e = mean.powf(1.0 / moment_order);
                (e, se / moment_order * mean.powf(1.0 / moment_order - 1.0))
            }
        } else {
            (mean, se)
        };
        points.push(CurvePoint { n, error, stderr, paths: vals.len(), diverged });
    }
    Ok(ErrorCurve { kind, moment_order, points, seed, scheme_id: scheme_id.into(), paths_requested: m })
}

/// Monte Carlo estimate of E[err^p]^{1/p} per level, where err is the sup
/// over shared nodes or the terminal difference against a reference path
/// built from the same fine increments (plus its own auxiliary randomness).
#[allow(clippy::too_many_arguments)]
pub fn strong_error(
    n_list: &[usize],
    n_ref: usize,
    m_paths: usize,
    p: f64,
    mode: ErrorMode,
    seed: u64,
    scheme_id: &str,
    gen_fine: impl Fn(&mut RngStream, usize) -> Vec<f64> + Sync,
    scheme: impl Fn(usize, &[f64]) -> Result<Vec<f64>> + Sync,
    reference: impl Fn(&[f64], &mut RngStream) -> Result<Vec<f64>> + Sync,
) -> Result<ErrorCurve> {
    check_levels(n_list, n_ref)?;
    if !(p > 0.0) {
        return Err(SimError::domain("strong_error", "p must be > 0"));
    }
    let per_path: Vec<Vec<Option<f64>>> = par_map_indexed(m_paths, |i| {
        let mut rng = RngStream::new(seed, i as u64);
        let mut aux = rng.split(u64::MAX);
        let fine = gen_fine(&mut rng, n_ref);
        let ref_path = match reference(&fine, &mut aux) {
            Ok(v) => v,
            Err(_) => return vec![None; n_list.len()],
        };
        n_list
            .iter()
            .map(|&n| {
                let inc = aggregate_increments(&fine, n_ref / n);
                match scheme(n, &inc) {
                    Ok(path) => {
                        let factor = n_ref / n;
                        let err = match mode {
                            ErrorMode::Sup => (0..=n)
                                .map(|k| (path[k] - ref_path[k * factor]).abs())
                                .fold(0.0f64, f64::max),
                            ErrorMode::Terminal => (path[n] - ref_path[n_ref]).abs(),
                        };
                        Some(err.powf(p))
                    }
                    Err(_) => None,
                }
            })
            .collect()
    });
    let kind = match mode {
        ErrorMode::Sup => ErrorKind::StrongSup,
        ErrorMode::Terminal => ErrorKind::StrongTerminal,
    };
    summarize(kind, p, n_list, per_path, seed, scheme_id, true)
}

/// Reference side of a weak-error comparison.
pub enum WeakOracle<R> {
    /// Exact expectation, known in closed form.
    ClosedForm(f64),
    /// Sampler of reference terminal values from (fine increments, aux rng).
    Sampler(R),
}

/// |E f(scheme terminal) - E f(reference)| per level with pooled stderr.
#[allow(clippy::too_many_arguments)]
pub fn weak_error<R>(
    n_list: &[usize],
    n_ref: usize,
    m_paths: usize,
    seed: u64,
    scheme_id: &str,
    payoff: impl Fn(f64) -> f64 + Sync,
    gen_fine: impl Fn(&mut RngStream, usize) -> Vec<f64> + Sync,
    scheme: impl Fn(usize, &[f64]) -> Result<Vec<f64>> + Sync,
    oracle: WeakOracle<R>,
) -> Result<ErrorCurve>
where
    R: Fn(&[f64], &mut RngStream) -> Result<f64> + Sync,
{
    check_levels(n_list, n_ref)?;
    struct Row {
        scheme_vals: Vec<Option<f64>>,
        ref_val: Option<f64>,
    }
    let rows: Vec<Row> = par_map_indexed(m_paths, |i| {
        let mut rng = RngStream::new(seed, i as u64);
        let mut aux = rng.split(u64::MAX);
        let fine = gen_fine(&mut rng, n_ref);
        let ref_val = match &oracle {
            WeakOracle::ClosedForm(_) => Some(0.0),
            WeakOracle::Sampler(r) => r(&fine, &mut aux).ok(),
        };
        let scheme_vals = n_list
            .iter()
            .map(|&n| {
                let inc = aggregate_increments(&fine, n_ref / n);
                scheme(n, &inc).ok().map(|path| payoff(path[n]))
            })
            .collect();
        Row { scheme_vals, ref_val }
    });
    let (ref_mean, ref_se) = match &oracle {
        WeakOracle::ClosedForm(v) => (*v, 0.0),
        WeakOracle::Sampler(_) => {
            let vals: Vec<f64> = rows.iter().filter_map(|r| r.ref_val).collect();
            if (rows.len() - vals.len()) as f64 > DIVERGENCE_FAIL_THRESHOLD * rows.len() as f64 {
                return Err(SimError::DivergenceThreshold {
                    diverged: rows.len() - vals.len(),
                    total: rows.len(),
                    threshold: DIVERGENCE_FAIL_THRESHOLD,
                });
            }
            mean_and_se(&vals)
        }
    };
    let m = rows.len();
    let mut points = Vec::new();
    for (li, &n) in n_list.iter().enumerate() {
        let vals: Vec<f64> = rows.iter().filter_map(|r| r.scheme_vals[li]).collect();
        let diverged = m - vals.len();
        if diverged as f64 > DIVERGENCE_FAIL_THRESHOLD * m as f64 {
            return Err(SimError::DivergenceThreshold { diverged, total: m, threshold: DIVERGENCE_FAIL_THRESHOLD });
        }
        let (mean, se) = mean_and_se(&vals);
        points.push(CurvePoint {
            n,
            error: (mean - ref_mean).abs(),
            stderr: (se * se + ref_se * ref_se).sqrt(),
            paths: vals.len(),
            diverged,
        });
    }
    Ok(ErrorCurve {
        kind: ErrorKind::Weak,
        moment_order: 1.0,
        points,
        seed,
        scheme_id: scheme_id.into(),
        paths_requested: m,
    })
}

/// T * E |g(X(s)) - g(X(eta(s)))|^q with s uniform on [0, T]: the scheme's
/// own in-cell oscillation of a BV payoff, sampled with exact bridge values.
/// Standard errors cluster by path since in-path samples are correlated.
#[allow(clippy::too_many_arguments)]
pub fn time_avg_bv_error(
    n_list: &[usize],
    m_paths: usize,
    samples_per_path: usize,
    q: f64,
    seed: u64,
    g: &BVFunction,
    cfg_at: impl Fn(usize) -> EmConfig + Sync,
) -> Result<ErrorCurve> {
    if n_list.is_empty() || samples_per_path == 0 {
        return Err(SimError::domain("time_avg_bv_error", "need levels and samples"));
    }
    let horizon = cfg_at(n_list[0]).grid.horizon();
    let per_path: Vec<Vec<Option<f64>>> = par_map_indexed(m_paths, |i| {
        let base = RngStream::new(seed, i as u64);
        n_list
            .iter()
            .enumerate()
            .map(|(li, &n)| {
                let cfg = cfg_at(n);
                let mut rng = base.split(li as u64);
                let inc = rng.brownian_increments(cfg.grid.horizon(), n);
                let path = match em_path(&cfg, &inc) {
                    Ok(p) => p,
                    Err(_) => return None,
                };
                let mut acc = 0.0;
                for _ in 0..samples_per_path {
                    let s = rng.unit() * cfg.grid.horizon();
                    let k = cfg.grid.left_index(s).expect("in range");
                    let at_s = em_bridge_value(&cfg, &path, &inc, s, &mut rng).expect("in range");
                    acc += (g.eval(at_s) - g.eval(path[k])).abs().powf(q);
                }
                Some(horizon * acc / samples_per_path as f64)
            })
            .collect()
    });
    summarize(ErrorKind::TimeAveragedBv, q, n_list, per_path, seed, "em-bridge", false)
}

/// Bound shape (log n / n)^{p a / (2 (p + a))} for running-maximum payoffs.
pub fn max_error_shape(n: usize, p: f64, alpha: f64) -> f64 {
    let n = n as f64;
    (n.ln() / n).powf(p * alpha / (2.0 * (p + alpha)))
}

/// E |g(max of continuous-time fine scheme) - g(grid max at level n)|^q per
/// level. The reference maximum is drawn exactly: per fine cell the
/// conditional maximum given both endpoints follows the reflection rule.
#[allow(clippy::too_many_arguments)]
pub fn max_functional_error(
    n_list: &[usize],
    n_ref: usize,
    m_paths: usize,
    q: f64,
    seed: u64,
    g: &BVFunction,
    cfg_at: impl Fn(usize) -> EmConfig + Sync,
) -> Result<ErrorCurve> {
    check_levels(n_list, n_ref)?;
    let per_path: Vec<Vec<Option<f64>>> = par_map_indexed(m_paths, |i| {
        let mut rng = RngStream::new(seed, i as u64);
        let mut aux = rng.split(u64::MAX);
        let ref_cfg = cfg_at(n_ref);
        let fine = rng.brownian_increments(ref_cfg.grid.horizon(), n_ref);
        let ref_path = match em_path(&ref_cfg, &fine) {
            Ok(p) => p,
            Err(_) => return vec![None; n_list.len()],
        };
        let mut ref_max = f64::NEG_INFINITY;
        for k in 0..n_ref {
            ref_max = ref_max.max(em_cell_max(&ref_cfg, &ref_path, k, &mut aux));
        }
        n_list
            .iter()
            .map(|&n| {
                let inc = aggregate_increments(&fine, n_ref / n);
                match em_path(&cfg_at(n), &inc) {
                    Ok(path) => {
                        let m = discrete_max(&path).expect("nonempty");
                        Some((g.eval(ref_max) - g.eval(m)).abs().powf(q))
                    }
                    Err(_) => None,
                }
            })
            .collect()
    });
    summarize(ErrorKind::MaxFunctional, q, n_list, per_path, seed, "em-max", false)
}
