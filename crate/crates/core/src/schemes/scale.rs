//! The drift-removing space transform phi(x) = int_0^x exp(-2 int_0^y b/sigma^2).

use crate::coeff::Coefficient1D;
use crate::error::{Result, SimError};
use crate::quad::integrate;
use std::cell::Cell;

/// Monotone increasing transform with derivative exp(-2 int_0^x b/sigma^2),
/// built from time-independent coefficients. Exposes the value, derivative
/// and a bisection inverse.
pub struct ScaleTransform {
    drift: Coefficient1D,
    diffusion: Coefficient1D,
    tol: f64,
}

impl ScaleTransform {
    pub fn new(drift: Coefficient1D, diffusion: Coefficient1D, tol: f64) -> Result<Self> {
        if diffusion.ellipticity_floor.is_none() {
            return Err(SimError::Validation(
                "scale transform requires a declared ellipticity floor on the diffusion".into(),
            ));
        }
        Ok(ScaleTransform { drift, diffusion, tol: tol.max(1e-14) })
    }

    fn ratio(&self, z: f64, violated: &Cell<bool>) -> f64 {
        let s = self.diffusion.eval(0.0, z);
        let s2 = s * s;
        if let Some(floor) = self.diffusion.ellipticity_floor {
            if s2 < floor * (1.0 - 1e-12) {
                violated.set(true);
                return 0.0;
            }
        }
        self.drift.eval(0.0, z) / s2
    }

    /// int_0^y b/sigma^2, with the ellipticity floor enforced at every node.
    fn inner(&self, y: f64, violated: &Cell<bool>) -> f64 {
        integrate(|z| self.ratio(z, violated), 0.0, y, self.tol * 0.1)
    }

    /// phi'(x) = exp(-2 int_0^x b/sigma^2).
    pub fn derivative(&self, x: f64) -> Result<f64> {
        let violated = Cell::new(false);
        let v = (-2.0 * self.inner(x, &violated)).exp();
        if violated.get() {
            return Err(SimError::domain("scale_function", "sigma^2 below ellipticity floor at a quadrature node"));
        }
        Ok(v)
    }

    /// phi(x) = int_0^x exp(-2 int_0^y b/sigma^2) dy.
    pub fn value(&self, x: f64) -> Result<f64> {
        let violated = Cell::new(false);
        let v = integrate(|y| (-2.0 * self.inner(y, &violated)).exp(), 0.0, x, self.tol);
        if violated.get() {
            return Err(SimError::domain("scale_function", "sigma^2 below ellipticity floor at a quadrature node"));
        }
        Ok(v)
    }

    /// Monotone bisection inverse of phi to the configured tolerance.
    pub fn inverse(&self, y: f64) -> Result<f64> {
        // bracket by doubling; phi is strictly increasing with phi(0) = 0
        let (mut lo, mut hi) = (-1.0f64, 1.0f64);
        for _ in 0..200 {
            if self.value(lo)? <= y {
                break;
            }
            lo *= 2.0;
        }
        for _ in 0..200 {
            if self.value(hi)? >= y {
                break;
            }
            hi *= 2.0;
        }
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if self.value(mid)? >= y {
                hi = mid;
            } else {
                lo = mid;
            }
            if hi - lo < self.tol.max(1e-13) * (1.0 + hi.abs()) {
                break;
            }
        }
        Ok(0.5 * (lo + hi))
    }
}
