//! Symmetric alpha-stable increments (Chambers-Mallows-Stuck sampling) and
//! the Euler scheme they drive. Stability index alpha in (1, 2]; alpha = 2 is
//! the Gaussian consistency case with characteristic function exp(-t xi^2).

use crate::coeff::Coefficient1D;
use crate::error::{Result, SimError};
use crate::grid::TimeGrid;
use crate::parallel::mean_and_se;
use crate::rng::RngStream;
use std::f64::consts::PI;

#[derive(Clone)]
pub struct StableConfig {
    pub alpha: f64,
    pub diffusion: Coefficient1D,
    pub x0: f64,
    pub grid: TimeGrid,
}

impl StableConfig {
    pub fn new(alpha: f64, diffusion: Coefficient1D, x0: f64, grid: TimeGrid) -> Result<Self> {
        check_alpha(alpha)?;
        if diffusion.sup_bound.is_none() || diffusion.ellipticity_floor.is_none() {
            return Err(SimError::Validation(
                "stable driver requires declared sup bound and positivity floor on sigma".into(),
            ));
        }
        Ok(StableConfig { alpha, diffusion, x0, grid })
    }

    /// Error moments of order >= alpha are infinite; refuse them up front.
    pub fn validate_moment_order(&self, p: f64) -> Result<()> {
        if p >= self.alpha {
            return Err(SimError::Validation(format!(
                "moment order p = {p} >= alpha = {}: moments of that order are infinite",
                self.alpha
            )));
        }
        Ok(())
    }
}

pub fn check_alpha(alpha: f64) -> Result<()> {
    if !(alpha > 1.0 && alpha <= 2.0) {
        return Err(SimError::domain("sample_stable_increment", format!("alpha = {alpha} outside (1, 2]")));
    }
    Ok(())
}

/// One draw with characteristic function exp(-dt |xi|^alpha).
///
/// Chambers-Mallows-Stuck in the symmetric parameterization: with U uniform
/// on (-pi/2, pi/2) and E standard exponential,
///   Z = sin(alpha U) / cos(U)^{1/alpha} * (cos((1-alpha) U) / E)^{(1-alpha)/alpha},
/// scaled by dt^{1/alpha}. At alpha = 2 this degenerates to 2 sin(U) sqrt(E),
/// which is N(0, 2).
pub fn sample_stable_increment(alpha: f64, dt: f64, rng: &mut RngStream) -> Result<f64> {
    check_alpha(alpha)?;
    if !(dt > 0.0) {
        return Err(SimError::domain("sample_stable_increment", format!("dt must be > 0, got {dt}")));
    }
    Ok(dt.powf(1.0 / alpha) * standard_symmetric_stable(alpha, rng))
}

#[inline]
pub fn standard_symmetric_stable(alpha: f64, rng: &mut RngStream) -> f64 {
    let u = PI * (rng.unit() - 0.5); // uniform on (-pi/2, pi/2)
    let e = rng.exponential();
    if alpha == 2.0 {
        return 2.0 * u.sin() * e.sqrt();
    }
    let su = (alpha * u).sin();
    let cu = u.cos();
    let tail = (((1.0 - alpha) * u).cos() / e).powf((1.0 - alpha) / alpha);
    su / cu.powf(1.0 / alpha) * tail
}

/// X_{k+1} = X_k + sigma(X_k) dZ_k: left-point evaluation of the coefficient.
pub fn stable_em_path(cfg: &StableConfig, increments: &[f64]) -> Result<Vec<f64>> {
    let n = cfg.grid.steps();
    if increments.len() != n {
        return Err(SimError::domain("stable_em_path", format!("expected {n} increments")));
    }
    let mut out = Vec::with_capacity(n + 1);
    let mut x = cfg.x0;
    out.push(x);
    for (k, dz) in increments.iter().enumerate() {
        x += cfg.diffusion.eval(cfg.grid.node(k), x) * dz;
        if !x.is_finite() {
            return Err(SimError::DivergedPath { step: k });
        }
        out.push(x);
    }
    Ok(out)
}

/// Predicted logarithmic error model for the stable Euler scheme: the error
/// in the (alpha-1)-moment decays like (log n)^{-(alpha-1)}.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StableRate {
    /// Exponent s of the (log n)^{-s} model.
    pub log_exponent: f64,
    /// The only finite moment order the harness may use.
    pub moment_order: f64,
}

pub fn stable_log_rate(alpha: f64) -> Result<StableRate> {
    if !(alpha > 1.0 && alpha < 2.0) {
        return Err(SimError::domain("stable_log_rate", format!("alpha = {alpha} outside (1, 2)")));
    }
    Ok(StableRate { log_exponent: alpha - 1.0, moment_order: alpha - 1.0 })
}

/// Real part of the empirical characteristic function at xi with its
/// standard error (the imaginary part has mean zero for symmetric laws).
pub fn empirical_cf(samples: &[f64], xi: f64) -> (f64, f64) {
    let cos_vals: Vec<f64> = samples.iter().map(|z| (xi * z).cos()).collect();
    mean_and_se(&cos_vals)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn alpha_two_matches_gaussian_variance() {
        let mut rng = RngStream::new(1, 0);
        let n = 400_000;
        let mut s2 = 0.0;
        for _ in 0..n {
            let z = sample_stable_increment(2.0, 1.0, &mut rng).unwrap();
            s2 += z * z;
        }
        let var = s2 / n as f64;
        assert!((var - 2.0).abs() < 0.02, "{var}");
    }

    #[test]
    fn characteristic_function_matches() {
        let mut rng = RngStream::new(2, 0);
        let n = 200_000;
        let dt = 0.5;
        let alpha = 1.5;
        let samples: Vec<f64> =
            (0..n).map(|_| sample_stable_increment(alpha, dt, &mut rng).unwrap()).collect();
        let (cf, se) = empirical_cf(&samples, 1.0);
        let want = (-dt * 1.0f64.powf(alpha)).exp();
        assert!((cf - want).abs() < 4.0 * se, "cf={cf} want={want} se={se}");
        let (cf0, _) = empirical_cf(&samples, 0.0);
        assert_eq!(cf0, 1.0);
    }

    #[test]
    fn symmetry() {
        let mut rng = RngStream::new(3, 0);
        let n = 100_000usize;
        let mut signs = 0.0;
        for _ in 0..n {
            signs += sample_stable_increment(1.3, 1.0, &mut rng).unwrap().signum();
        }
        assert!((signs / n as f64).abs() < 3.0 / (n as f64).sqrt() + 1e-3);
    }

    #[test]
    fn convolution_stability() {
        // sum of increments over (dt1, dt2) ~ one increment over dt1+dt2
        use crate::ecdf::EmpiricalCDF;
        let mut rng = RngStream::new(4, 0);
        let m = 20_000;
        let alpha = 1.5;
        let a: Vec<f64> = (0..m)
            .map(|_| {
                sample_stable_increment(alpha, 0.3, &mut rng).unwrap()
                    + sample_stable_increment(alpha, 0.7, &mut rng).unwrap()
            })
            .collect();
        let b: Vec<f64> = (0..m).map(|_| sample_stable_increment(alpha, 1.0, &mut rng).unwrap()).collect();
        let fa = EmpiricalCDF::new(a).unwrap();
        let fb = EmpiricalCDF::new(b).unwrap();
        let ks = fa.ks_distance_two_sample(&fb);
        assert!(ks <= 2.0 / (m as f64).sqrt(), "ks={ks}");
    }

    #[test]
    fn scheme_with_unit_sigma_is_the_driver() {
        let grid = TimeGrid::new(1.0, 8).unwrap();
        let sigma = Coefficient1D::constant(1.0).with_ellipticity_floor(1.0);
        let cfg = StableConfig::new(1.7, sigma, 0.5, grid).unwrap();
        let mut rng = RngStream::new(5, 0);
        let inc: Vec<f64> =
            (0..8).map(|_| sample_stable_increment(1.7, grid.dt(), &mut rng).unwrap()).collect();
        let path = stable_em_path(&cfg, &inc).unwrap();
        let mut z = 0.5;
        for (k, dz) in inc.iter().enumerate() {
            z += dz;
            assert_eq!(path[k + 1], z);
        }
    }

    #[test]
    fn rate_descriptor() {
        let r = stable_log_rate(1.5).unwrap();
        assert!((r.log_exponent - 0.5).abs() < 1e-15);
        assert!((r.moment_order - 0.5).abs() < 1e-15);
        let r = stable_log_rate(1.9).unwrap();
        assert!((r.log_exponent - 0.9).abs() < 1e-15);
        assert!(stable_log_rate(2.0).is_err());
    }

    #[test]
    fn moment_order_validation() {
        let grid = TimeGrid::new(1.0, 4).unwrap();
        let sigma = Coefficient1D::constant(1.0).with_ellipticity_floor(1.0);
        let cfg = StableConfig::new(1.5, sigma, 0.0, grid).unwrap();
        assert!(cfg.validate_moment_order(0.5).is_ok());
        assert!(cfg.validate_moment_order(1.5).is_err());
        assert!(cfg.validate_moment_order(1.7).is_err());
    }

    #[test]
    fn domain_errors() {
        let mut rng = RngStream::new(6, 0);
        assert!(sample_stable_increment(1.0, 1.0, &mut rng).is_err());
        assert!(sample_stable_increment(2.1, 1.0, &mut rng).is_err());
        assert!(sample_stable_increment(1.5, 0.0, &mut rng).is_err());
    }

    #[test]
    fn tail_exponent_close_to_alpha() {
        let mut rng = RngStream::new(7, 0);
        let alpha = 1.5;
        let n = 1_000_000usize;
        let samples: Vec<f64> =
            (0..n).map(|_| standard_symmetric_stable(alpha, &mut rng).abs()).collect();
        // survival counts at log-spaced thresholds in [10, 100]
        let thresholds: Vec<f64> = (0..6).map(|i| 10.0 * 10f64.powf(i as f64 / 5.0)).collect();
        let mut xs = Vec::new();
        let mut ys = Vec::new();
        for &t in &thresholds {
            let count = samples.iter().filter(|&&z| z > t).count();
            assert!(count > 0);
            xs.push(t.ln());
            ys.push((count as f64 / n as f64).ln());
        }
        // least squares slope
        let mx = xs.iter().sum::<f64>() / xs.len() as f64;
        let my = ys.iter().sum::<f64>() / ys.len() as f64;
        let mut num = 0.0;
        let mut den = 0.0;
        for i in 0..xs.len() {
            num += (xs[i] - mx) * (ys[i] - my);
            den += (xs[i] - mx) * (xs[i] - mx);
        }
        let slope = num / den;
        assert!((slope + alpha).abs() < 0.1, "fitted tail exponent {slope}");
    }
}
