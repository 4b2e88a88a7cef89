//! Smoothing pair (psi, phi) used to regularize absolute values.
//!
//! psi is supported on [eps/delta, eps], integrates to one and obeys the
//! envelope psi(z) <= 2/(z log delta); phi is its double primitive applied to
//! |x|. The concrete psi here is a normalized tent divided by z: zero at the
//! support endpoints, flat on the middle half. The envelope condition reduces
//! to a closed-form inequality on the normalizer, which the constructor
//! checks and refuses to violate.

use crate::error::{Result, SimError};

#[derive(Debug, Clone, Copy)]
struct Piece {
    lo: f64,
    hi: f64,
    // density piece: psi(z) = (p + q / z) / z_norm on [lo, hi]
    p: f64,
    q: f64,
    // Psi(lo) where Psi(y) = int_a^y psi
    psi_acc: f64,
    // int_a^lo Psi(y) dy
    phi_acc: f64,
}

#[derive(Debug, Clone)]
pub struct Mollifier {
    delta: f64,
    eps: f64,
    support: (f64, f64),
    z_norm: f64,
    pieces: [Piece; 3],
}

impl Mollifier {
    pub fn new(delta: f64, eps: f64) -> Result<Self> {
        if !(delta > 1.0) || !delta.is_finite() {
            return Err(SimError::domain("build_mollifier", format!("delta must be > 1, got {delta}")));
        }
        if !(eps > 0.0 && eps < 1.0) {
            return Err(SimError::domain("build_mollifier", format!("eps must be in (0,1), got {eps}")));
        }
        let a = eps / delta;
        let b = eps;
        let w = (b - a) / 4.0;
        // tent/z pieces before normalization
        let raw = [
            (a, a + w, 1.0 / w, -a / w),
            (a + w, b - w, 0.0, 1.0),
            (b - w, b, -1.0 / w, b / w),
        ];
        let mut z_norm = 0.0;
        for &(lo, hi, p, q) in &raw {
            z_norm += p * (hi - lo) + q * (hi / lo).ln();
        }
        // pointwise envelope psi <= 2/(z log delta) <=> z_norm >= log(delta)/2
        if z_norm < delta.ln() / 2.0 {
            return Err(SimError::domain(
                "build_mollifier",
                format!(
                    "tent normalizer {z_norm:.6} < log(delta)/2 = {:.6}; envelope 2/(z log delta) would be violated",
                    delta.ln() / 2.0
                ),
            ));
        }
        let mut pieces = [Piece { lo: 0.0, hi: 0.0, p: 0.0, q: 0.0, psi_acc: 0.0, phi_acc: 0.0 }; 3];
        let mut psi_acc = 0.0;
        let mut phi_acc = 0.0;
        for (i, &(lo, hi, p, q)) in raw.iter().enumerate() {
            pieces[i] = Piece { lo, hi, p, q, psi_acc, phi_acc };
            let seg_psi = (p * (hi - lo) + q * (hi / lo).ln()) / z_norm;
            // int_lo^hi Psi(y) dy with Psi(y) = psi_acc + (p (y-lo) + q ln(y/lo)) / z_norm
            let seg_phi = psi_acc * (hi - lo)
                + (p * (hi - lo).powi(2) / 2.0 + q * (hi * (hi / lo).ln() - (hi - lo))) / z_norm;
            psi_acc += seg_psi;
            phi_acc += seg_phi;
        }
        debug_assert!((psi_acc - 1.0).abs() < 1e-12);
        Ok(Mollifier { delta, eps, support: (a, b), z_norm, pieces })
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }

    pub fn eps(&self) -> f64 {
        self.eps
    }

    pub fn support(&self) -> (f64, f64) {
        self.support
    }

    fn piece_at(&self, z: f64) -> Option<&Piece> {
        self.pieces.iter().find(|p| z >= p.lo && z <= p.hi)
    }

    pub fn psi(&self, z: f64) -> f64 {
        if z < self.support.0 || z > self.support.1 {
            return 0.0;
        }
        match self.piece_at(z) {
            Some(p) => ((p.p + p.q / z) / self.z_norm).max(0.0),
            None => 0.0,
        }
    }

    /// Psi(y) = int_0^y psi(z) dz (monotone, 0 below the support, 1 above).
    pub fn psi_integral(&self, y: f64) -> f64 {
        if y <= self.support.0 {
            return 0.0;
        }
        if y >= self.support.1 {
            return 1.0;
        }
        let p = self.piece_at(y).expect("inside support");
        p.psi_acc + (p.p * (y - p.lo) + p.q * (y / p.lo).ln()) / self.z_norm
    }

    /// phi(x) = int_0^{|x|} int_0^y psi(z) dz dy, in closed form.
    pub fn phi(&self, x: f64) -> f64 {
        let y = x.abs();
        let (a, b) = self.support;
        if y <= a {
            return 0.0;
        }
        if y >= b {
            let p = &self.pieces[2];
            let full = p.phi_acc + self.segment_phi(p, b);
            return full + (y - b);
        }
        let p = self.piece_at(y).expect("inside support");
        p.phi_acc + self.segment_phi(p, y)
    }

    fn segment_phi(&self, p: &Piece, y: f64) -> f64 {
        p.psi_acc * (y - p.lo)
            + (p.p * (y - p.lo).powi(2) / 2.0 + p.q * (y * (y / p.lo).ln() - (y - p.lo))) / self.z_norm
    }

    /// phi'(x) = sgn(x) Psi(|x|); bounded by 1 in absolute value.
    pub fn phi_prime(&self, x: f64) -> f64 {
        x.signum() * self.psi_integral(x.abs())
    }

    /// phi''(x) = psi(|x|).
    pub fn phi_second(&self, x: f64) -> f64 {
        self.psi(x.abs())
    }
}
