//! Uniform time grids and the left-node projection used by every scheme.

use crate::error::{Result, SimError};
use serde::{Deserialize, Serialize};

/// Uniform grid t_k = k*T/n on [0, T].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TimeGrid {
    horizon: f64,
    steps: usize,
}

impl TimeGrid {
    pub fn new(horizon: f64, steps: usize) -> Result<Self> {
        if !(horizon > 0.0) || !horizon.is_finite() {
            return Err(SimError::domain("TimeGrid::new", format!("horizon must be positive, got {horizon}")));
        }
        if steps == 0 {
            return Err(SimError::domain("TimeGrid::new", "steps must be >= 1"));
        }
        Ok(TimeGrid { horizon, steps })
    }

    pub fn horizon(&self) -> f64 {
        self.horizon
    }

    pub fn steps(&self) -> usize {
        self.steps
    }

    pub fn dt(&self) -> f64 {
        self.horizon / self.steps as f64
    }

    pub fn node(&self, k: usize) -> f64 {
        debug_assert!(k <= self.steps);
        k as f64 * self.horizon / self.steps as f64
    }

    pub fn nodes(&self) -> impl Iterator<Item = f64> + '_ {
        (0..=self.steps).map(|k| self.node(k))
    }

    /// Index of the left grid node of s: the k with t_k <= s < t_{k+1}.
    /// s = T maps to n-1 so callers never index past the last step.
    pub fn left_index(&self, s: f64) -> Result<usize> {
        if !(0.0..=self.horizon).contains(&s) {
            return Err(SimError::domain(
                "TimeGrid::eta",
                format!("s = {s} outside [0, {}]", self.horizon),
            ));
        }
        let k = ((self.steps as f64) * s / self.horizon).floor() as usize;
        Ok(k.min(self.steps - 1))
    }

    /// eta(s): the left grid node of s, with eta(T) = (n-1)T/n.
    pub fn eta(&self, s: f64) -> Result<f64> {
        Ok(self.node(self.left_index(s)?))
    }
}
