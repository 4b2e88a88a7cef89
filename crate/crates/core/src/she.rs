//! Explicit finite-difference lattice scheme for the Dirichlet stochastic
//! heat equation driven by space-time white noise, with deterministic and
//! spectral oracles for the linear case.

use crate::error::{Result, SimError};
use crate::rng::RngStream;
use crate::special::normal_cdf;
use std::f64::consts::PI;
use std::io::{Read, Write};
use std::sync::Arc;

/// Coefficient (t, x, u) -> R of the lattice equation.
#[derive(Clone)]
pub struct SheCoeff {
    id: String,
    f: Arc<dyn Fn(f64, f64, f64) -> f64 + Send + Sync>,
}

impl SheCoeff {
    pub fn new(id: impl Into<String>, f: impl Fn(f64, f64, f64) -> f64 + Send + Sync + 'static) -> Self {
        SheCoeff { id: id.into(), f: Arc::new(f) }
    }

    pub fn constant(c: f64) -> Self {
        SheCoeff::new(format!("const({c})"), move |_, _, _| c)
    }

    pub fn zero() -> Self {
        SheCoeff::constant(0.0)
    }

    pub fn id(&self) -> &str {
        &self.id
    }

    #[inline]
    pub fn eval(&self, t: f64, x: f64, u: f64) -> f64 {
        (self.f)(t, x, u)
    }
}

#[derive(Clone)]
pub struct SheConfig {
    pub horizon: f64,
    pub time_steps: usize,
    pub space_intervals: usize,
    pub drift: SheCoeff,
    pub diffusion: SheCoeff,
    pub initial: Arc<dyn Fn(f64) -> f64 + Send + Sync>,
    pub override_cfl: bool,
}

impl SheConfig {
    pub fn new(
        horizon: f64,
        time_steps: usize,
        space_intervals: usize,
        drift: SheCoeff,
        diffusion: SheCoeff,
        initial: impl Fn(f64) -> f64 + Send + Sync + 'static,
    ) -> Self {
        SheConfig {
            horizon,
            time_steps,
            space_intervals,
            drift,
            diffusion,
            initial: Arc::new(initial),
            override_cfl: false,
        }
    }

    pub fn with_cfl_override(mut self) -> Self {
        self.override_cfl = true;
        self
    }

    /// Explicit-scheme stability: m >= 2 T n^2 keeps |1 + lambda_j T/m| <= 1.
    pub fn cfl_satisfied(&self) -> bool {
        self.time_steps as f64 >= 2.0 * self.horizon * (self.space_intervals as f64).powi(2)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.horizon > 0.0) || self.time_steps == 0 || self.space_intervals < 2 {
            return Err(SimError::Validation("need T > 0, m >= 1, n >= 2".into()));
        }
        let u0_left = (self.initial)(0.0);
        let u0_right = (self.initial)(1.0);
        if u0_left.abs() > 1e-12 || u0_right.abs() > 1e-12 {
            return Err(SimError::Validation(format!(
                "initial condition must vanish at the boundary: u0(0) = {u0_left}, u0(1) = {u0_right}"
            )));
        }
        if !self.cfl_satisfied() && !self.override_cfl {
            return Err(SimError::Validation(format!(
                "stability requires m >= 2 T n^2 = {} (got m = {}); pass the override to run anyway",
                2.0 * self.horizon * (self.space_intervals as f64).powi(2),
                self.time_steps
            )));
        }
        Ok(())
    }
}

/// Space-time lattice of field values with zero Dirichlet columns.
#[derive(Debug, Clone, PartialEq)]
pub struct LatticeField {
    pub time_steps: usize,
    pub space_intervals: usize,
    pub horizon: f64,
    pub seed: u64,
    /// Row-major (m+1) x (n+1).
    values: Vec<f64>,
}

impl LatticeField {
    pub fn value(&self, i: usize, j: usize) -> f64 {
        self.values[i * (self.space_intervals + 1) + j]
    }

    pub fn row(&self, i: usize) -> &[f64] {
        let w = self.space_intervals + 1;
        &self.values[i * w..(i + 1) * w]
    }

    pub fn terminal_row(&self) -> &[f64] {
        self.row(self.time_steps)
    }

    /// Polygonal interpolation, space first then time.
    pub fn interpolate(&self, t: f64, x: f64) -> f64 {
        let m = self.time_steps as f64;
        let n = self.space_intervals as f64;
        let ti = ((t / self.horizon * m).floor() as usize).min(self.time_steps - 1);
        let xj = ((x * n).floor() as usize).min(self.space_intervals - 1);
        let theta_t = (t / self.horizon * m - ti as f64).clamp(0.0, 1.0);
        let theta_x = (x * n - xj as f64).clamp(0.0, 1.0);
        let space = |i: usize| {
            let a = self.value(i, xj);
            let b = self.value(i, xj + 1);
            a + theta_x * (b - a)
        };
        let lo = space(ti);
        let hi = space(ti + 1);
        lo + theta_t * (hi - lo)
    }

    /// CSV rows (i, j, t, x, value) with a header.
    pub fn write_csv(&self, out: &mut impl Write) -> std::io::Result<()> {
        writeln!(out, "i,j,t,x,value")?;
        for i in 0..=self.time_steps {
            let t = i as f64 * self.horizon / self.time_steps as f64;
            for j in 0..=self.space_intervals {
                let x = j as f64 / self.space_intervals as f64;
                writeln!(out, "{i},{j},{t},{x},{}", self.value(i, j))?;
            }
        }
        Ok(())
    }

    /// Compact layout: magic, m, n, T, seed, then row-major values.
    pub fn write_binary(&self, out: &mut impl Write) -> std::io::Result<()> {
        out.write_all(b"SHE0")?;
        out.write_all(&(self.time_steps as u32).to_le_bytes())?;
        out.write_all(&(self.space_intervals as u32).to_le_bytes())?;
        out.write_all(&self.horizon.to_le_bytes())?;
        out.write_all(&self.seed.to_le_bytes())?;
        for v in &self.values {
            out.write_all(&v.to_le_bytes())?;
        }
        Ok(())
    }

    pub fn read_binary(input: &mut impl Read) -> std::io::Result<Self> {
        let mut magic = [0u8; 4];
        input.read_exact(&mut magic)?;
        if &magic != b"SHE0" {
            return Err(std::io::Error::new(std::io::ErrorKind::InvalidData, "bad magic"));
        }
        let mut b4 = [0u8; 4];
        let mut b8 = [0u8; 8];
        input.read_exact(&mut b4)?;
        let m = u32::from_le_bytes(b4) as usize;
        input.read_exact(&mut b4)?;
        let n = u32::from_le_bytes(b4) as usize;
        input.read_exact(&mut b8)?;
        let horizon = f64::from_le_bytes(b8);
        input.read_exact(&mut b8)?;
        let seed = u64::from_le_bytes(b8);
        let mut values = vec![0.0; (m + 1) * (n + 1)];
        for v in values.iter_mut() {
            input.read_exact(&mut b8)?;
            *v = f64::from_le_bytes(b8);
        }
        Ok(LatticeField { time_steps: m, space_intervals: n, horizon, seed, values })
    }
}

/// Second difference n^2 (u_{j+1} - 2 u_j + u_{j-1}).
pub fn discrete_laplacian(left: f64, center: f64, right: f64, n: usize) -> f64 {
    (n as f64) * (n as f64) * (right - 2.0 * center + left)
}

/// i.i.d. per-cell sheet increments N(0, T/(mn)), row-major over (i, j)
/// with i the time index (m rows of n cells).
pub fn brownian_sheet_cells(m: usize, n: usize, horizon: f64, rng: &mut RngStream) -> Vec<f64> {
    let sd = (horizon / (m as f64 * n as f64)).sqrt();
    (0..m * n).map(|_| sd * rng.normal()).collect()
}

/// One explicit step: out_j = (I + (T/m) Lap_n) u + (T/m) b + (T/m) sigma (nm dW).
pub fn gyongy_step(
    prev: &[f64],
    cfg: &SheConfig,
    time_index: usize,
    cells: &[f64],
) -> Result<Vec<f64>> {
    let n = cfg.space_intervals;
    let m = cfg.time_steps as f64;
    debug_assert_eq!(prev.len(), n + 1);
    debug_assert_eq!(cells.len(), n);
    let dt = cfg.horizon / m;
    let t = time_index as f64 * dt;
    let box_scale = n as f64 * m; // cell increment -> square-difference value
    let mut out = vec![0.0; n + 1];
    for j in 1..n {
        let x = j as f64 / n as f64;
        let u = prev[j];
        let lap = discrete_laplacian(prev[j - 1], u, prev[j + 1], n);
        let v = u
            + dt * lap
            + dt * cfg.drift.eval(t, x, u)
            + dt * cfg.diffusion.eval(t, x, u) * box_scale * cells[j - 1];
        if !v.is_finite() {
            return Err(SimError::DivergedField { i: time_index + 1, j });
        }
        out[j] = v;
    }
    Ok(out)
}

/// Full rollout of the explicit scheme from the initial condition.
pub fn she_simulate(cfg: &SheConfig, seed: u64, stream_id: u64) -> Result<LatticeField> {
    cfg.validate()?;
    let (m, n) = (cfg.time_steps, cfg.space_intervals);
    let mut rng = RngStream::new(seed, stream_id);
    let mut values = Vec::with_capacity((m + 1) * (n + 1));
    let mut row: Vec<f64> = (0..=n).map(|j| (cfg.initial)(j as f64 / n as f64)).collect();
    row[0] = 0.0;
    row[n] = 0.0;
    values.extend_from_slice(&row);
    let sd = (cfg.horizon / (m as f64 * n as f64)).sqrt();
    let mut cells = vec![0.0; n];
    for i in 0..m {
        for c in cells.iter_mut() {
            *c = sd * rng.normal();
        }
        row = gyongy_step(&row, cfg, i, &cells)?;
        values.extend_from_slice(&row);
    }
    Ok(LatticeField { time_steps: m, space_intervals: n, horizon: cfg.horizon, seed, values })
}

/// Eigenvalue -4 n^2 sin^2(j pi / 2n) of the lattice Laplacian.
pub fn lattice_eigen(j: usize, n: usize) -> Result<f64> {
    if j == 0 || j >= n {
        return Err(SimError::domain("lattice_eigen", format!("j = {j} outside 1..={}", n - 1)));
    }
    let s = (j as f64 * PI / (2.0 * n as f64)).sin();
    Ok(-4.0 * (n as f64) * (n as f64) * s * s)
}

/// sqrt(2) sin(j pi x).
pub fn sine_mode(j: usize, x: f64) -> f64 {
    std::f64::consts::SQRT_2 * (j as f64 * PI * x).sin()
}

/// Polygonal interpolation of the sine mode on the space lattice.
pub fn sine_mode_polygonal(j: usize, n: usize, x: f64) -> f64 {
    let nf = n as f64;
    let k = ((x * nf).floor() as usize).min(n - 1);
    let xk = k as f64 / nf;
    let a = sine_mode(j, xk);
    let b = sine_mode(j, (k + 1) as f64 / nf);
    a + nf * (x - xk) * (b - a)
}

/// Left lattice projection kappa_n(y) = floor(n y)/n.
pub fn kappa(n: usize, y: f64) -> f64 {
    ((n as f64 * y).floor() / n as f64).min(1.0)
}

/// Discrete evolution kernel
/// sum_j (1 + lambda_j T/m)^{floor(m t/T)} phi_j^n(x) phi_j^n(kappa_n(y)).
pub fn spectral_kernel(m: usize, n: usize, horizon: f64, t: f64, x: f64, y: f64) -> f64 {
    let power = ((m as f64) * t / horizon).floor() as i32;
    let ky = kappa(n, y);
    let mut acc = 0.0;
    for j in 1..n {
        let mu = 1.0 + lattice_eigen(j, n).unwrap() * horizon / m as f64;
        acc += mu.powi(power) * sine_mode_polygonal(j, n, x) * sine_mode_polygonal(j, n, ky);
    }
    acc
}

/// Linear-case oracle at lattice nodes: the kernel applied to u0 on the
/// lattice. Exactly the i-step rollout of the noiseless, driftless scheme.
pub fn spectral_solution_row(
    m: usize,
    n: usize,
    horizon: f64,
    time_index: usize,
    u0: impl Fn(f64) -> f64,
) -> Vec<f64> {
    let t = time_index as f64 * horizon / m as f64;
    (0..=n)
        .map(|jx| {
            if jx == 0 || jx == n {
                return 0.0;
            }
            let x = jx as f64 / n as f64;
            let mut acc = 0.0;
            for k in 1..n {
                let xk = k as f64 / n as f64;
                acc += spectral_kernel(m, n, horizon, t, x, xk) * u0(xk);
            }
            acc / n as f64
        })
        .collect()
}

/// Dirichlet heat kernel on [0,1] as a truncated image-charge sum:
/// (2 pi t)^{-1/2} sum_k { e^{-(y-x+2k)^2/2t} - e^{-(y+x+2k)^2/2t} }.
pub fn heat_kernel_images(t: f64, x: f64, y: f64, image_terms: i64) -> Result<f64> {
    if !(t > 0.0) {
        return Err(SimError::domain("heat_kernel_G", format!("t must be > 0, got {t}")));
    }
    if image_terms < 1 {
        return Err(SimError::domain("heat_kernel_G", "need at least one image term"));
    }
    let mut acc = 0.0;
    for k in -image_terms..=image_terms {
        let k = k as f64;
        acc += (-(y - x + 2.0 * k).powi(2) / (2.0 * t)).exp();
        acc -= (-(y + x + 2.0 * k).powi(2) / (2.0 * t)).exp();
    }
    Ok(acc / (2.0 * PI * t).sqrt())
}

/// Dirichlet heat kernel of d/dt = kappa d^2/dx^2 as a sine series,
/// truncated at relative tolerance; the image representation above equals
/// this series at diffusivity 1/2.
pub fn heat_kernel_series(t: f64, x: f64, y: f64, diffusivity: f64, rel_tol: f64) -> f64 {
    let mut acc = 0.0;
    let mut quiet = 0;
    for j in 1..10_000 {
        let jf = j as f64;
        let term = 2.0 * (-jf * jf * PI * PI * diffusivity * t).exp() * (jf * PI * x).sin() * (jf * PI * y).sin();
        acc += term;
        // sine factors vanish on subgrids; stop only after a quiet run
        quiet = if term.abs() < rel_tol * acc.abs().max(1e-300) { quiet + 1 } else { 0 };
        if quiet >= 4 && j > 8 {
            break;
        }
    }
    acc
}

/// Exact variance of the lattice field at node (i, j) for b = 0, sigma = 1,
/// u0 = 0, from the discrete spectral decomposition.
pub fn discrete_variance(m: usize, n: usize, horizon: f64, time_index: usize, space_index: usize) -> f64 {
    let x = space_index as f64 / n as f64;
    let per_step = horizon.powi(3) * n as f64 / m as f64; // Var((T/m) nm dW) per node
    let mut acc = 0.0;
    for q in 1..n {
        let mu = 1.0 + lattice_eigen(q, n).unwrap() * horizon / m as f64;
        let mu2 = mu * mu;
        let geom = if (1.0 - mu2).abs() < 1e-15 {
            time_index as f64
        } else {
            (1.0 - mu2.powi(time_index as i32)) / (1.0 - mu2)
        };
        let e = (2.0 / n as f64) * (q as f64 * PI * x).sin().powi(2);
        acc += per_step * e * geom;
    }
    acc
}

/// Continuum variance oracle int_0^t int_0^1 G(t-s,x,y)^2 dy ds for the
/// unit-diffusivity Dirichlet equation, integrated per mode in closed form.
pub fn continuum_variance(t: f64, x: f64, rel_tol: f64) -> f64 {
    // sum_j sin^2(j pi x)/(j pi)^2 = x(1-x)/2 exactly, so only the
    // geometrically decaying heat tail needs summation
    let stationary = 0.5 * x * (1.0 - x);
    let mut tail = 0.0;
    let mut quiet = 0;
    for j in 1..100_000 {
        let jf = j as f64;
        let lam = jf * jf * PI * PI;
        let term = (jf * PI * x).sin().powi(2) * (-2.0 * lam * t).exp() / lam;
        tail += term;
        quiet = if term < rel_tol * stationary.max(1e-300) { quiet + 1 } else { 0 };
        if quiet >= 4 && j > 8 {
            break;
        }
    }
    stationary - tail
}

/// Strong-rate shape m^{-1/4} + n^{-1/2} (constant-free).
pub fn lattice_strong_rate(m: usize, n: usize) -> f64 {
    (m as f64).powf(-0.25) + (n as f64).powf(-0.5)
}

/// Weak-rate exponent pair (time, space) for a rho-Holder payoff and
/// gamma-regular drift: factor = min(rho, (1-eps) gamma / 4), the drift
/// factor improving to gamma when the drift is Holder in the state variable.
pub fn lattice_weak_rate(rho: f64, gamma: f64, eps: f64, holder_drift: bool) -> (f64, f64) {
    let drift_factor = if holder_drift { gamma } else { (1.0 - eps) * gamma / 4.0 };
    let factor = rho.min(drift_factor);
    (factor / 4.0, factor / 2.0)
}

/// Worst explicit-step growth factor max_j |1 + lambda_j T / m|; above one
/// the highest lattice mode is amplified every step.
pub fn amplification_factor(m: usize, n: usize, horizon: f64) -> f64 {
    (1..n)
        .map(|j| (1.0 + lattice_eigen(j, n).unwrap() * horizon / m as f64).abs())
        .fold(0.0, f64::max)
}

/// Gaussian CDF helper re-export for field statistics consumers.
pub fn field_value_cdf(z: f64) -> f64 {
    normal_cdf(z)
}
