//! Bounded-variation functions as a constant plus finitely many signed jumps.
//!
//! Evaluation is g(x) = c + sum of jumps strictly left of x, plus jumps at x
//! whose closure is `Left` (the jump takes effect at its own location).
//! Total variation is the sum of absolute jump sizes, exactly.

use crate::error::{Result, SimError};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum JumpSide {
    /// Value at the jump location already includes the jump: 1_{[z, inf)} style.
    Left,
    /// Jump takes effect only strictly right of the location: 1_{(z, inf)} style.
    Right,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Jump {
    pub location: f64,
    pub size: f64,
    pub side: JumpSide,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BVFunction {
    constant: f64,
    jumps: Vec<Jump>,
}

impl BVFunction {
    pub fn new(constant: f64, mut jumps: Vec<Jump>) -> Result<Self> {
        jumps.sort_by(|a, b| a.location.partial_cmp(&b.location).unwrap());
        for w in jumps.windows(2) {
            if w[0].location == w[1].location {
                return Err(SimError::domain("BVFunction::new", "jump locations must be distinct"));
            }
        }
        if jumps.iter().any(|j| !j.location.is_finite() || !j.size.is_finite()) {
            return Err(SimError::domain("BVFunction::new", "jumps must be finite"));
        }
        Ok(BVFunction { constant, jumps })
    }

    pub fn constant_fn(c: f64) -> Self {
        BVFunction { constant: c, jumps: Vec::new() }
    }

    /// 1_{(z, inf)}.
    pub fn indicator_above_open(z: f64) -> Self {
        BVFunction { constant: 0.0, jumps: vec![Jump { location: z, size: 1.0, side: JumpSide::Right }] }
    }

    /// 1_{[z, inf)}.
    pub fn indicator_above_closed(z: f64) -> Self {
        BVFunction { constant: 0.0, jumps: vec![Jump { location: z, size: 1.0, side: JumpSide::Left }] }
    }

    /// 1_{(-inf, z]} = 1 - 1_{(z, inf)}.
    pub fn indicator_below_closed(z: f64) -> Self {
        BVFunction { constant: 1.0, jumps: vec![Jump { location: z, size: -1.0, side: JumpSide::Right }] }
    }

    /// sgn = -1 + 2 * 1_{(0, inf)}.
    pub fn sign() -> Self {
        BVFunction { constant: -1.0, jumps: vec![Jump { location: 0.0, size: 2.0, side: JumpSide::Right }] }
    }

    pub fn jumps(&self) -> &[Jump] {
        &self.jumps
    }

    pub fn total_variation(&self) -> f64 {
        self.jumps.iter().map(|j| j.size.abs()).sum()
    }

    pub fn eval(&self, x: f64) -> f64 {
        let mut v = self.constant;
        for j in &self.jumps {
            if j.location < x || (j.location == x && j.side == JumpSide::Left) {
                v += j.size;
            } else if j.location > x {
                break;
            }
        }
        v
    }
}
