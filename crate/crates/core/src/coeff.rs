//! Evaluable drift/diffusion coefficients with declared structural bounds.

use std::fmt;
use std::sync::Arc;

/// A scalar coefficient (t, x) -> R with optional declared bounds.
///
/// The bounds are metadata used by validation and by schemes that need them
/// (ellipticity for scale transforms, growth exponents for taming). When a
/// sup bound is declared, debug builds assert it on every sampled argument.
#[derive(Clone)]
pub struct Coefficient1D {
    id: String,
    eval: Arc<dyn Fn(f64, f64) -> f64 + Send + Sync>,
    pub sup_bound: Option<f64>,
    pub ellipticity_floor: Option<f64>,
    pub growth_exponent: Option<f64>,
    pub one_sided_lipschitz: Option<f64>,
    /// Extra moment exponents (p0, p1) when a Khasminskii-type condition is declared.
    pub moment_exponents: Option<(f64, f64)>,
}

impl fmt::Debug for Coefficient1D {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Coefficient1D")
            .field("id", &self.id)
            .field("sup_bound", &self.sup_bound)
            .field("ellipticity_floor", &self.ellipticity_floor)
            .field("growth_exponent", &self.growth_exponent)
            .finish()
    }
}

impl Coefficient1D {
    pub fn new(id: impl Into<String>, eval: impl Fn(f64, f64) -> f64 + Send + Sync + 'static) -> Self {
        Coefficient1D {
            id: id.into(),
            eval: Arc::new(eval),
            sup_bound: None,
            ellipticity_floor: None,
            growth_exponent: None,
            one_sided_lipschitz: None,
            moment_exponents: None,
        }
    }

    pub fn constant(c: f64) -> Self {
        Coefficient1D::new(format!("const({c})"), move |_, _| c).with_sup_bound(c.abs())
    }

    pub fn zero() -> Self {
        Coefficient1D::constant(0.0)
    }

    pub fn with_sup_bound(mut self, b: f64) -> Self {
        self.sup_bound = Some(b);
        self
    }

    pub fn with_ellipticity_floor(mut self, f: f64) -> Self {
        self.ellipticity_floor = Some(f);
        self
    }

    pub fn with_growth_exponent(mut self, ell: f64) -> Self {
        self.growth_exponent = Some(ell);
        self
    }

    pub fn with_one_sided_lipschitz(mut self, k: f64) -> Self {
        self.one_sided_lipschitz = Some(k);
        self
    }

    pub fn with_moment_exponents(mut self, p0: f64, p1: f64) -> Self {
        self.moment_exponents = Some((p0, p1));
        self
    }

    pub fn id(&self) -> &str {
        &self.id
    }

    #[inline]
    pub fn eval(&self, t: f64, x: f64) -> f64 {
        let v = (self.eval)(t, x);
        #[cfg(debug_assertions)]
        if let Some(b) = self.sup_bound {
            debug_assert!(
                !v.is_finite() || v.abs() <= b * (1.0 + 1e-12) + 1e-12,
                "coefficient {} exceeded declared sup bound: |{v}| > {b} at (t={t}, x={x})",
                self.id
            );
        }
        v
    }

    /// True when the declared ellipticity floor holds at x (squared value).
    pub fn satisfies_floor(&self, t: f64, x: f64) -> bool {
        match self.ellipticity_floor {
            Some(f) => {
                let v = self.eval(t, x);
                v * v >= f * (1.0 - 1e-12)
            }
            None => true,
        }
    }
}
