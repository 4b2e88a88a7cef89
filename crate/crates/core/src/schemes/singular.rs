//! Local-time SDEs with atomic skew measures, removed by the space transform
//! built from the atom products, and the driftless Euler scheme in the
//! transformed coordinate.

use crate::coeff::Coefficient1D;
use crate::error::{Result, SimError};
use crate::grid::TimeGrid;
use crate::rng::RngStream;
use serde::{Deserialize, Serialize};

/// Finitely many signed atoms (a_i, w_i) with |w_i| < 1 and distinct a_i.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SignedAtomMeasure {
    atoms: Vec<(f64, f64)>,
    /// prefix[k] = product of (1-w)/(1+w) over the first k atoms.
    prefix: Vec<f64>,
    /// Transform values at the atom locations, anchored at F(0) = 0.
    knots: Vec<f64>,
}

impl SignedAtomMeasure {
    pub fn new(mut atoms: Vec<(f64, f64)>) -> Result<Self> {
        atoms.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
        for w in atoms.windows(2) {
            if w[0].0 == w[1].0 {
                return Err(SimError::domain("SignedAtomMeasure", "atom locations must be distinct"));
            }
        }
        for &(a, w) in &atoms {
            if !a.is_finite() || !(w.abs() < 1.0) {
                return Err(SimError::domain(
                    "SignedAtomMeasure",
                    format!("atom ({a}, {w}) violates |weight| < 1"),
                ));
            }
        }
        let m = atoms.len();
        let mut prefix = Vec::with_capacity(m + 1);
        prefix.push(1.0);
        for &(_, w) in &atoms {
            let r = (1.0 - w) / (1.0 + w);
            prefix.push(prefix.last().unwrap() * r);
        }
        // knot values of F, anchored so that F(0) = 0
        let mut knots = vec![0.0; m];
        if m > 0 {
            let j0 = atoms.partition_point(|&(a, _)| a <= 0.0);
            // walk right of the anchor
            if j0 < m {
                // 0 lies left of atom j0; slope on [a_{j0-1}, a_{j0}) is prefix[j0]
                knots[j0] = prefix[j0] * (atoms[j0].0 - 0.0);
                for j in j0 + 1..m {
                    knots[j] = knots[j - 1] + prefix[j] * (atoms[j].0 - atoms[j - 1].0);
                }
            }
            // walk left of the anchor
            if j0 > 0 {
                knots[j0 - 1] = -prefix[j0] * (0.0 - atoms[j0 - 1].0);
                for j in (0..j0 - 1).rev() {
                    knots[j] = knots[j + 1] - prefix[j + 1] * (atoms[j + 1].0 - atoms[j].0);
                }
            }
        }
        Ok(SignedAtomMeasure { atoms, prefix, knots })
    }

    pub fn empty() -> Self {
        SignedAtomMeasure::new(Vec::new()).unwrap()
    }

    /// Skew unit: a single atom of weight 2*alpha - 1 at `location`.
    pub fn skew(location: f64, alpha: f64) -> Result<Self> {
        SignedAtomMeasure::new(vec![(location, 2.0 * alpha - 1.0)])
    }

    pub fn atoms(&self) -> &[(f64, f64)] {
        &self.atoms
    }

    pub fn total_variation(&self) -> f64 {
        self.atoms.iter().map(|&(_, w)| w.abs()).sum()
    }

    /// Full product over all atoms; the lower endpoint of the density range
    /// when all weights are nonnegative.
    pub fn floor_constant(&self) -> f64 {
        *self.prefix.last().unwrap()
    }

    /// Exact range of the density f over the real line: the min and max of
    /// the partial products. Equals [floor_constant, 1] for nonnegative atoms.
    pub fn density_range(&self) -> (f64, f64) {
        let lo = self.prefix.iter().cloned().fold(f64::INFINITY, f64::min);
        let hi = self.prefix.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        (lo, hi)
    }

    /// f(x) = prod over atoms at or left of x of (1-w)/(1+w); right-continuous.
    pub fn density(&self, x: f64) -> f64 {
        let k = self.atoms.partition_point(|&(a, _)| a <= x);
        self.prefix[k]
    }

    /// F(x) = int_0^x f(y) dy: piecewise linear, strictly increasing.
    pub fn transform(&self, x: f64) -> f64 {
        let m = self.atoms.len();
        if m == 0 {
            return x;
        }
        let k = self.atoms.partition_point(|&(a, _)| a <= x);
        if k == 0 {
            self.knots[0] + self.prefix[0] * (x - self.atoms[0].0)
        } else {
            self.knots[k - 1] + self.prefix[k] * (x - self.atoms[k - 1].0)
        }
    }

    /// Exact piecewise-linear inverse of the transform.
    pub fn transform_inverse(&self, y: f64) -> f64 {
        let m = self.atoms.len();
        if m == 0 {
            return y;
        }
        let k = self.knots.partition_point(|&v| v <= y);
        if k == 0 {
            self.atoms[0].0 + (y - self.knots[0]) / self.prefix[0]
        } else {
            self.atoms[k - 1].0 + (y - self.knots[k - 1]) / self.prefix[k]
        }
    }
}

#[derive(Debug, Clone)]
pub struct SingularPaths {
    /// Transformed driftless Euler path.
    pub y: Vec<f64>,
    /// Original coordinates: x[k] = F^{-1}(y[k]).
    pub x: Vec<f64>,
}

/// Driftless Euler scheme for the transformed equation, mapped back through
/// the inverse transform. The diffusion must declare a sup bound and an
/// ellipticity floor; a missing floor is exactly the regime (sgn-type noise)
/// where no strong solution exists, so construction is refused.
pub fn singular_sde_scheme(
    sigma: &Coefficient1D,
    nu: &SignedAtomMeasure,
    grid: TimeGrid,
    x0: f64,
    increments: &[f64],
) -> Result<SingularPaths> {
    if sigma.sup_bound.is_none() || sigma.ellipticity_floor.is_none() {
        return Err(SimError::Validation(
            "singular scheme requires declared sup bound and ellipticity floor on sigma".into(),
        ));
    }
    let n = grid.steps();
    if increments.len() != n {
        return Err(SimError::domain("singular_sde_scheme", "increments must match the grid"));
    }
    let mut y = Vec::with_capacity(n + 1);
    let mut yv = nu.transform(x0);
    y.push(yv);
    for (k, db) in increments.iter().enumerate() {
        let xv = nu.transform_inverse(yv);
        let coeff = nu.density(xv) * sigma.eval(0.0, xv);
        yv += coeff * db;
        if !yv.is_finite() {
            return Err(SimError::DivergedPath { step: k });
        }
        y.push(yv);
    }
    let x = y.iter().map(|&v| nu.transform_inverse(v)).collect();
    Ok(SingularPaths { y, x })
}

/// Convenience: simulate one skew path with internally drawn increments.
pub fn singular_sde_path(
    sigma: &Coefficient1D,
    nu: &SignedAtomMeasure,
    grid: TimeGrid,
    x0: f64,
    rng: &mut RngStream,
) -> Result<SingularPaths> {
    let inc = rng.brownian_increments(grid.horizon(), grid.steps());
    singular_sde_scheme(sigma, nu, grid, x0, &inc)
}
