//! Fractional Brownian motion: exact Gaussian sampling (dense Cholesky by
//! default, circulant embedding of the increments as the fast path), the
//! Volterra kernel representation, and the Euler scheme for additive-noise
//! SDEs with irregular drift.

use crate::coeff::Coefficient1D;
use crate::error::{Result, SimError};
use crate::grid::TimeGrid;
use crate::quad::integrate;
use crate::rng::RngStream;
use crate::special::{gamma, hyp2f1};
use std::f64::consts::PI;

/// Covariance (1/2)(|t|^{2H} + |s|^{2H} - |t-s|^{2H}).
pub fn fbm_covariance(h: f64, t: f64, s: f64) -> f64 {
    0.5 * (t.abs().powf(2.0 * h) + s.abs().powf(2.0 * h) - (t - s).abs().powf(2.0 * h))
}

/// Autocovariance of unit-spacing increments at lag k.
fn fgn_autocov(h: f64, k: usize) -> f64 {
    let k = k as f64;
    0.5 * ((k + 1.0).powf(2.0 * h) - 2.0 * k.powf(2.0 * h) + (k - 1.0).abs().powf(2.0 * h))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FbmMethod {
    Cholesky,
    Circulant,
}

/// Exact sampler of fBm increments on a uniform grid.
pub struct FbmSampler {
    pub hurst: f64,
    pub grid: TimeGrid,
    method: FbmMethod,
    /// Lower-triangular factor of the increment covariance (Cholesky mode).
    chol: Vec<f64>,
    /// sqrt(eigenvalue / (2 M)) table for the embedding (circulant mode).
    circ: Vec<f64>,
    /// Diagonal jitter that was needed to factorize, 0 when none.
    pub jitter: f64,
}

fn check_hurst(h: f64) -> Result<()> {
    if !(h > 0.0 && h < 1.0) {
        return Err(SimError::domain("fbm", format!("Hurst parameter {h} outside (0, 1)")));
    }
    Ok(())
}

impl FbmSampler {
    /// Dense Cholesky of the increment covariance; exact for any grid size
    /// that fits in memory.
    pub fn cholesky(h: f64, grid: TimeGrid) -> Result<Self> {
        check_hurst(h)?;
        let n = grid.steps();
        let scale = grid.dt().powf(2.0 * h);
        let cov: Vec<f64> = (0..n * n)
            .map(|idx| scale * fgn_autocov(h, (idx / n).abs_diff(idx % n)))
            .collect();
        let (chol, jitter) = cholesky_with_jitter(cov, n)?;
        Ok(FbmSampler { hurst: h, grid, method: FbmMethod::Cholesky, chol, circ: Vec::new(), jitter })
    }

    /// Circulant embedding of the increment covariance. Requires a
    /// power-of-two step count; fails if the embedding has negative
    /// eigenvalues (callers fall back to Cholesky).
    pub fn circulant(h: f64, grid: TimeGrid) -> Result<Self> {
        check_hurst(h)?;
        let n = grid.steps();
        if !n.is_power_of_two() {
            return Err(SimError::domain("fbm_sample", format!("circulant path needs power-of-two steps, got {n}")));
        }
        let m = 2 * n;
        let mut row: Vec<Complex> = Vec::with_capacity(m);
        for k in 0..=n {
            row.push(Complex::new(fgn_autocov(h, k), 0.0));
        }
        for k in (1..n).rev() {
            row.push(Complex::new(fgn_autocov(h, k), 0.0));
        }
        fft(&mut row);
        let mut circ = Vec::with_capacity(m);
        let max_eig = row.iter().map(|c| c.re).fold(0.0f64, f64::max);
        for c in &row {
            if c.re < -1e-9 * max_eig {
                return Err(SimError::Factorization { jitter: c.re });
            }
            circ.push((c.re.max(0.0) / (2.0 * m as f64)).sqrt());
        }
        Ok(FbmSampler { hurst: h, grid, method: FbmMethod::Circulant, chol: Vec::new(), circ, jitter: 0.0 })
    }

    pub fn method(&self) -> FbmMethod {
        self.method
    }

    /// One exact draw of the n increments.
    pub fn sample_increments(&self, rng: &mut RngStream) -> Vec<f64> {
        let n = self.grid.steps();
        match self.method {
            FbmMethod::Cholesky => {
                let z: Vec<f64> = (0..n).map(|_| rng.normal()).collect();
                let mut out = vec![0.0; n];
                for i in 0..n {
                    let mut acc = 0.0;
                    for j in 0..=i {
                        acc += self.chol[i * n + j] * z[j];
                    }
                    out[i] = acc;
                }
                out
            }
            FbmMethod::Circulant => {
                let m = 2 * n;
                let mut v = vec![Complex::new(0.0, 0.0); m];
                v[0] = Complex::new(self.circ[0] * std::f64::consts::SQRT_2 * rng.normal(), 0.0);
                v[n] = Complex::new(self.circ[n] * std::f64::consts::SQRT_2 * rng.normal(), 0.0);
                for k in 1..n {
                    let re = rng.normal();
                    let im = rng.normal();
                    v[k] = Complex::new(self.circ[k] * re, self.circ[k] * im);
                    v[m - k] = Complex::new(self.circ[k] * re, -self.circ[k] * im);
                }
                fft(&mut v);
                let scale = self.grid.dt().powf(self.hurst);
                v[..n].iter().map(|c| c.re * scale).collect()
            }
        }
    }

    /// Path values at the n+1 grid nodes, starting from zero, plus increments.
    pub fn sample_path(&self, rng: &mut RngStream) -> (Vec<f64>, Vec<f64>) {
        let inc = self.sample_increments(rng);
        let mut path = Vec::with_capacity(inc.len() + 1);
        let mut acc = 0.0;
        path.push(acc);
        for d in &inc {
            acc += d;
            path.push(acc);
        }
        (path, inc)
    }
}

fn cholesky_with_jitter(mut cov: Vec<f64>, n: usize) -> Result<(Vec<f64>, f64)> {
    let base: Vec<f64> = cov.clone();
    let scale = (0..n).map(|i| base[i * n + i]).fold(0.0f64, f64::max);
    for &jit in &[0.0, 1e-14, 1e-12, 1e-10] {
        cov.copy_from_slice(&base);
        for i in 0..n {
            cov[i * n + i] += jit * scale;
        }
        if let Some(l) = try_cholesky(&cov, n) {
            return Ok((l, jit * scale));
        }
    }
    Err(SimError::Factorization { jitter: 1e-10 * scale })
}

fn try_cholesky(a: &[f64], n: usize) -> Option<Vec<f64>> {
    let mut l = vec![0.0; n * n];
    for i in 0..n {
        for j in 0..=i {
            let mut sum = a[i * n + j];
            for k in 0..j {
                sum -= l[i * n + k] * l[j * n + k];
            }
            if i == j {
                if sum <= 0.0 {
                    return None;
                }
                l[i * n + j] = sum.sqrt();
            } else {
                l[i * n + j] = sum / l[j * n + j];
            }
        }
    }
    Some(l)
}

#[derive(Clone, Copy)]
struct Complex {
    re: f64,
    im: f64,
}

impl Complex {
    fn new(re: f64, im: f64) -> Self {
        Complex { re, im }
    }
    fn mul(self, o: Complex) -> Complex {
        Complex::new(self.re * o.re - self.im * o.im, self.re * o.im + self.im * o.re)
    }
    fn add(self, o: Complex) -> Complex {
        Complex::new(self.re + o.re, self.im + o.im)
    }
    fn sub(self, o: Complex) -> Complex {
        Complex::new(self.re - o.re, self.im - o.im)
    }
}

/// In-place iterative radix-2 FFT (forward, e^{-2 pi i jk/len}).
fn fft(buf: &mut [Complex]) {
    let n = buf.len();
    assert!(n.is_power_of_two());
    // bit-reversal permutation
    let mut j = 0usize;
    for i in 1..n {
        let mut bit = n >> 1;
        while j & bit != 0 {
            j ^= bit;
            bit >>= 1;
        }
        j |= bit;
        if i < j {
            buf.swap(i, j);
        }
    }
    let mut len = 2;
    while len <= n {
        let ang = -2.0 * PI / len as f64;
        let wl = Complex::new(ang.cos(), ang.sin());
        let mut i = 0;
        while i < n {
            let mut w = Complex::new(1.0, 0.0);
            for k in 0..len / 2 {
                let u = buf[i + k];
                let v = buf[i + k + len / 2].mul(w);
                buf[i + k] = u.add(v);
                buf[i + k + len / 2] = u.sub(v);
                w = w.mul(wl);
            }
            i += len;
        }
        len <<= 1;
    }
}

/// Normalizing constant: the displayed kernel shape integrates to
/// V_H t^{2H} rather than t^{2H}, with V_H = Gamma(2-2H) cos(pi H) / (pi H (1-2H)).
pub fn kernel_norm_sq(h: f64) -> f64 {
    if h == 0.5 {
        return 1.0;
    }
    gamma(2.0 - 2.0 * h) * (PI * h).cos() / (PI * h * (1.0 - 2.0 * h))
}

/// Volterra kernel of the integral representation of fBm against a standard
/// Brownian motion, normalized so that int_0^t K_H(t,s)^2 ds = t^{2H}.
///
/// The hypergeometric argument 1 - t/s is negative, so the evaluation maps it
/// into (0, 1) with the Pfaff transformation before series summation.
pub fn kernel_k_h(h: f64, t: f64, s: f64) -> Result<f64> {
    check_hurst(h)?;
    if !(s > 0.0 && s < t) {
        return Err(SimError::domain("kernel_K_H", format!("need 0 < s < t, got s={s}, t={t}")));
    }
    if h == 0.5 {
        return Ok(1.0);
    }
    let a = h - 0.5;
    let c = h + 0.5;
    // Pfaff: F(a, b; c; 1 - t/s) = (t/s)^{-a} F(a, c - b; c; 1 - s/t)
    let w = 1.0 - s / t;
    let f = (t / s).powf(-a) * hyp2f1(a, 2.0 * h, c, w);
    Ok((t - s).powf(a) / gamma(c) * f / kernel_norm_sq(h).sqrt())
}

/// int_0^t K_H(t,s)^2 ds by quadrature, with power substitutions absorbing
/// the endpoint singularities at s = 0 and s = t.
pub fn kernel_isometry(h: f64, t: f64) -> Result<f64> {
    check_hurst(h)?;
    if h == 0.5 {
        return Ok(t);
    }
    let k2 = |s: f64| {
        let k = kernel_k_h(h, t, s).expect("interior point");
        k * k
    };
    let e = 2.0 * h;
    // left half: s = u^{1/2H}, integrand s^{2H-1} absorbed
    let left = integrate(
        |u| {
            let s = u.powf(1.0 / e);
            k2(s) * s.powf(1.0 - e) / e
        },
        0.0,
        (t / 2.0).powf(e),
        1e-10,
    );
    // right half: t - s = v^{1/2H}
    let right = integrate(
        |v| {
            let d = v.powf(1.0 / e);
            let s = t - d;
            k2(s) * d.powf(1.0 - e) / e
        },
        0.0,
        (t / 2.0).powf(e),
        1e-10,
    );
    Ok(left + right)
}

#[derive(Clone)]
pub struct FbmConfig {
    pub hurst: f64,
    pub drift: Coefficient1D,
    pub x0: f64,
    pub grid: TimeGrid,
}

impl FbmConfig {
    pub fn new(hurst: f64, drift: Coefficient1D, x0: f64, grid: TimeGrid) -> Result<Self> {
        check_hurst(hurst)?;
        Ok(FbmConfig { hurst, drift, x0, grid })
    }

    /// The scheme's rate theory assumes a rough driver; reports should flag
    /// runs outside that regime rather than refuse them.
    pub fn within_rate_theory(&self) -> bool {
        self.hurst < 0.5
    }
}

/// X_{k+1} = X_k + b(X_k) dt + dB^H_k for externally supplied fBm increments.
pub fn fbm_em_path(cfg: &FbmConfig, increments: &[f64]) -> Result<Vec<f64>> {
    let n = cfg.grid.steps();
    if increments.len() != n {
        return Err(SimError::domain("fbm_em_path", format!("expected {n} increments")));
    }
    let dt = cfg.grid.dt();
    let mut out = Vec::with_capacity(n + 1);
    let mut x = cfg.x0;
    out.push(x);
    for (k, db) in increments.iter().enumerate() {
        x += cfg.drift.eval(cfg.grid.node(k), x) * dt + db;
        if !x.is_finite() {
            return Err(SimError::DivergedPath { step: k });
        }
        out.push(x);
    }
    Ok(out)
}

/// Predicted strong-rate exponent on the p-th root scale for the additive
/// fBm Euler scheme with one-sided Lipschitz, BV-controlled drift:
/// (1-eps) H / (p (H+1)) when p*gamma >= 1, else (1-eps) gamma H / (H+1).
pub fn fbm_strong_rate(h: f64, gamma: f64, p: f64, eps: f64) -> Result<f64> {
    if !(h > 0.0 && h < 0.5) {
        return Err(SimError::domain("fbm_strong_rate", format!("Hurst {h} outside (0, 1/2)")));
    }
    Ok(if p * gamma >= 1.0 {
        (1.0 - eps) * h / (p * (h + 1.0))
    } else {
        (1.0 - eps) * gamma * h / (h + 1.0)
    })
}

/// L^1 variant of the rate: (1-eps) gamma H / (H+1).
pub fn fbm_l1_rate(h: f64, gamma: f64, eps: f64) -> Result<f64> {
    if !(h > 0.0 && h < 0.5) {
        return Err(SimError::domain("fbm_l1_rate", format!("Hurst {h} outside (0, 1/2)")));
    }
    Ok((1.0 - eps) * gamma * h / (h + 1.0))
}
