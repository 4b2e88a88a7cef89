//! Explicit Euler-Maruyama stepping with left-node coefficient freezing,
//! shared-increment coupling across grids, and exact in-cell bridge sampling.

use crate::coeff::Coefficient1D;
use crate::error::{Result, SimError};
use crate::grid::TimeGrid;
use crate::rng::RngStream;
use std::sync::Arc;

#[derive(Clone)]
pub struct EmConfig {
    pub drift: Coefficient1D,
    pub diffusion: Coefficient1D,
    pub x0: f64,
    pub grid: TimeGrid,
}

impl EmConfig {
    pub fn new(drift: Coefficient1D, diffusion: Coefficient1D, x0: f64, grid: TimeGrid) -> Self {
        EmConfig { drift, diffusion, x0, grid }
    }
}

/// X_{k+1} = X_k + b(t_k, X_k) dt + sigma(t_k, X_k) dB_k.
///
/// Deterministic given the increments. A non-finite state aborts the path
/// with the step index that produced it.
pub fn em_path(cfg: &EmConfig, increments: &[f64]) -> Result<Vec<f64>> {
    let n = cfg.grid.steps();
    if increments.len() != n {
        return Err(SimError::domain("em_path", format!("expected {n} increments, got {}", increments.len())));
    }
    let dt = cfg.grid.dt();
    let mut out = Vec::with_capacity(n + 1);
    let mut x = cfg.x0;
    out.push(x);
    for (k, db) in increments.iter().enumerate() {
        let t = cfg.grid.node(k);
        x += cfg.drift.eval(t, x) * dt + cfg.diffusion.eval(t, x) * db;
        if !x.is_finite() {
            return Err(SimError::DivergedPath { step: k });
        }
        out.push(x);
    }
    Ok(out)
}

/// Value of the continuous-time scheme at an off-grid time s, sampled exactly:
/// within the cell of s the scheme is x_k + b dt' + sigma (B(s) - B(t_k)),
/// and the Brownian value is bridged against the cell's full increment.
pub fn em_bridge_value(
    cfg: &EmConfig,
    path: &[f64],
    increments: &[f64],
    s: f64,
    rng: &mut RngStream,
) -> Result<f64> {
    let k = cfg.grid.left_index(s)?;
    let t_k = cfg.grid.node(k);
    let dt = cfg.grid.dt();
    let theta = (s - t_k) / dt;
    let x_k = path[k];
    let db = increments[k];
    // B(s) - B(t_k) | dB ~ N(theta dB, theta (1-theta) dt)
    let w = theta * db + (theta * (1.0 - theta) * dt).sqrt() * rng.normal();
    Ok(x_k + cfg.drift.eval(t_k, x_k) * (s - t_k) + cfg.diffusion.eval(t_k, x_k) * w)
}

/// Exact draw of the maximum of the continuous-time scheme over cell k, given
/// both endpoints. Conditioned on its endpoints the in-cell motion is a
/// Brownian bridge (the drift is absorbed by the conditioning), so the
/// reflection formula applies.
pub fn em_cell_max(cfg: &EmConfig, path: &[f64], k: usize, rng: &mut RngStream) -> f64 {
    let a = path[k];
    let b = path[k + 1];
    let t_k = cfg.grid.node(k);
    let vol = cfg.diffusion.eval(t_k, a);
    let var = vol * vol * cfg.grid.dt();
    if var <= 0.0 {
        return a.max(b);
    }
    let u = rng.unit();
    0.5 * (a + b + ((b - a) * (b - a) - 2.0 * var * u.ln()).sqrt())
}

/// Coarse increments as in-order sums of fine increments. The identity
/// "each coarse increment equals the sum of its fine sub-increments" holds
/// bit-exactly because this is the definition used everywhere.
pub fn aggregate_increments(fine: &[f64], factor: usize) -> Vec<f64> {
    assert!(factor >= 1 && fine.len().is_multiple_of(factor), "refinement factor must divide the fine grid");
    fine.chunks(factor).map(|c| c.iter().sum()).collect()
}

/// A fine increment array together with one coarsening of it.
#[derive(Debug, Clone)]
pub struct CoupledIncrements {
    pub fine_grid: TimeGrid,
    pub coarse_grid: TimeGrid,
    pub factor: usize,
    pub fine: Vec<f64>,
    pub coarse: Vec<f64>,
}

impl CoupledIncrements {
    pub fn new(fine_grid: TimeGrid, fine: Vec<f64>, coarse_steps: usize) -> Result<Self> {
        let nf = fine_grid.steps();
        if !nf.is_multiple_of(coarse_steps) {
            return Err(SimError::domain("CoupledIncrements", format!("{coarse_steps} does not divide {nf}")));
        }
        let factor = nf / coarse_steps;
        let coarse = aggregate_increments(&fine, factor);
        let coarse_grid = TimeGrid::new(fine_grid.horizon(), coarse_steps)?;
        Ok(CoupledIncrements { fine_grid, coarse_grid, factor, fine, coarse })
    }
}

/// Coefficients (t, x, y) -> R for the second component of a decoupled pair.
pub type PairCoefficient = Arc<dyn Fn(f64, f64, f64) -> f64 + Send + Sync>;

#[derive(Clone)]
pub struct PairCoefficients {
    pub mu: PairCoefficient,
    pub rho1: PairCoefficient,
    pub rho2: PairCoefficient,
}

impl PairCoefficients {
    pub fn new(
        mu: impl Fn(f64, f64, f64) -> f64 + Send + Sync + 'static,
        rho1: impl Fn(f64, f64, f64) -> f64 + Send + Sync + 'static,
        rho2: impl Fn(f64, f64, f64) -> f64 + Send + Sync + 'static,
    ) -> Self {
        PairCoefficients { mu: Arc::new(mu), rho1: Arc::new(rho1), rho2: Arc::new(rho2) }
    }
}

/// Joint Euler step for the pair (X, Y) driven by independent increments
/// (dB, dW): X evolves on its own, Y reads the frozen (t_k, X_k, Y_k).
pub fn coupled_system_em(
    x_cfg: &EmConfig,
    pair: &PairCoefficients,
    y0: f64,
    inc_b: &[f64],
    inc_w: &[f64],
) -> Result<(Vec<f64>, Vec<f64>)> {
    let n = x_cfg.grid.steps();
    if inc_b.len() != n || inc_w.len() != n {
        return Err(SimError::domain("coupled_system_em", "increment arrays must match the grid"));
    }
    let dt = x_cfg.grid.dt();
    let mut xs = Vec::with_capacity(n + 1);
    let mut ys = Vec::with_capacity(n + 1);
    let (mut x, mut y) = (x_cfg.x0, y0);
    xs.push(x);
    ys.push(y);
    for k in 0..n {
        let t = x_cfg.grid.node(k);
        let db = inc_b[k];
        let dw = inc_w[k];
        let xn = x + x_cfg.drift.eval(t, x) * dt + x_cfg.diffusion.eval(t, x) * db;
        let yn = y + (pair.mu)(t, x, y) * dt + (pair.rho1)(t, x, y) * db + (pair.rho2)(t, x, y) * dw;
        if !xn.is_finite() || !yn.is_finite() {
            return Err(SimError::DivergedPath { step: k });
        }
        x = xn;
        y = yn;
        xs.push(x);
        ys.push(y);
    }
    Ok((xs, ys))
}
