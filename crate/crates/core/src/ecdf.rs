//! Empirical distribution functions and the left-continuous quantile map.

use crate::error::{Result, SimError};
use std::sync::Arc;

/// Anything that can act as a distribution function F(x) = mu(f <= x) / mu(S).
pub trait Cdf {
    fn eval(&self, x: f64) -> f64;

    /// Search bracket [lo, hi] guaranteed to contain every quantile.
    fn bracket(&self) -> (f64, f64);

    /// Generalized inverse inf{x : F(x) >= s}. Default: monotone bisection.
    fn quantile_left(&self, s: f64) -> Result<f64> {
        check_quantile_arg(s)?;
        let (mut lo, mut hi) = self.bracket();
        if self.eval(lo) >= s {
            return Ok(lo);
        }
        // invariant: F(lo) < s <= F(hi)
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if self.eval(mid) >= s {
                hi = mid;
            } else {
                lo = mid;
            }
            if hi - lo <= 1e-12 * (1.0 + hi.abs()) {
                break;
            }
        }
        Ok(hi)
    }
}

pub(crate) fn check_quantile_arg(s: f64) -> Result<()> {
    if !(s > 0.0 && s <= 1.0) {
        return Err(SimError::domain("skorokhod_inverse", format!("s = {s} outside (0, 1]")));
    }
    Ok(())
}

/// Sorted sample set with F(x) = #{samples <= x} / M.
#[derive(Debug, Clone)]
pub struct EmpiricalCDF {
    samples: Vec<f64>,
}

impl EmpiricalCDF {
    pub fn new(mut samples: Vec<f64>) -> Result<Self> {
        if samples.is_empty() {
            return Err(SimError::domain("EmpiricalCDF::new", "need at least one sample"));
        }
        if samples.iter().any(|x| !x.is_finite()) {
            return Err(SimError::domain("EmpiricalCDF::new", "samples must be finite"));
        }
        samples.sort_by(|a, b| a.partial_cmp(b).unwrap());
        Ok(EmpiricalCDF { samples })
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn samples(&self) -> &[f64] {
        &self.samples
    }

    pub fn min(&self) -> f64 {
        self.samples[0]
    }

    pub fn max(&self) -> f64 {
        *self.samples.last().unwrap()
    }

    /// k-th order statistic, 1-indexed.
    pub fn order_statistic(&self, k: usize) -> f64 {
        self.samples[k - 1]
    }

    /// Smallest positive gap between consecutive distinct samples.
    pub fn min_gap(&self) -> Option<f64> {
        self.samples
            .windows(2)
            .map(|w| w[1] - w[0])
            .filter(|d| *d > 0.0)
            .fold(None, |acc: Option<f64>, d| Some(acc.map_or(d, |a| a.min(d))))
    }

    /// Default lower scale for Holder estimation: below max(3/M, twice the
    /// smallest inter-sample gap) a step CDF has an unbounded quotient.
    pub fn recommended_h_min(&self) -> f64 {
        let stat = 3.0 / self.len() as f64;
        match self.min_gap() {
            Some(g) => stat.max(2.0 * g),
            None => stat,
        }
    }

    /// Kolmogorov-Smirnov distance against an analytic CDF.
    pub fn ks_distance(&self, f: impl Fn(f64) -> f64) -> f64 {
        let m = self.len() as f64;
        let mut d: f64 = 0.0;
        for (i, &x) in self.samples.iter().enumerate() {
            let fx = f(x);
            d = d.max((fx - i as f64 / m).abs());
            d = d.max(((i + 1) as f64 / m - fx).abs());
        }
        d
    }

    /// Two-sample KS distance.
    pub fn ks_distance_two_sample(&self, other: &EmpiricalCDF) -> f64 {
        let mut d: f64 = 0.0;
        for &x in &self.samples {
            d = d.max((self.eval(x) - other.eval(x)).abs());
        }
        for &x in &other.samples {
            d = d.max((self.eval(x) - other.eval(x)).abs());
        }
        d
    }
}

impl Cdf for EmpiricalCDF {
    fn eval(&self, x: f64) -> f64 {
        let count = self.samples.partition_point(|s| *s <= x);
        count as f64 / self.samples.len() as f64
    }

    fn bracket(&self) -> (f64, f64) {
        (self.min(), self.max())
    }

    /// Exact: the ceil(s*M)-th order statistic.
    fn quantile_left(&self, s: f64) -> Result<f64> {
        check_quantile_arg(s)?;
        let m = self.samples.len();
        let k = ((s * m as f64).ceil() as usize).clamp(1, m);
        Ok(self.order_statistic(k))
    }
}

/// Analytic CDF wrapper for oracle distributions.
#[derive(Clone)]
pub struct AnalyticCdf {
    f: Arc<dyn Fn(f64) -> f64 + Send + Sync>,
    lo: f64,
    hi: f64,
}

impl AnalyticCdf {
    pub fn new(f: impl Fn(f64) -> f64 + Send + Sync + 'static, lo: f64, hi: f64) -> Self {
        AnalyticCdf { f: Arc::new(f), lo, hi }
    }

    pub fn uniform01() -> Self {
        AnalyticCdf::new(|x| x.clamp(0.0, 1.0), 0.0, 1.0)
    }
}

impl Cdf for AnalyticCdf {
    fn eval(&self, x: f64) -> f64 {
        (self.f)(x)
    }

    fn bracket(&self) -> (f64, f64) {
        (self.lo, self.hi)
    }
}
