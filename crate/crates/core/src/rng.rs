//! Counter-based splittable random streams.
//!
//! Every draw is a pure function of (seed, stream_id, counter), so parallel
//! Monte Carlo is bit-reproducible at any thread count: assign one stream per
//! path and reduce in path order. Splitting derives a child key without
//! touching the parent's counter, so there is no shared mutable state.

use serde::{Deserialize, Serialize};

const GOLDEN: u64 = 0x9E37_79B9_7F4A_7C15;

#[inline(always)]
fn mix64(mut z: u64) -> u64 {
    // splitmix64 finalizer
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// A stateless-keyed random stream. Draw i is `mix64(key ^ i*GOLDEN)`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RngStream {
    seed: u64,
    stream_id: u64,
    key: u64,
    counter: u64,
    #[serde(skip)]
    spare_normal: Option<f64>,
}

impl RngStream {
    pub fn new(seed: u64, stream_id: u64) -> Self {
        let key = mix64(mix64(seed ^ 0x243F_6A88_85A3_08D3) ^ mix64(stream_id.wrapping_mul(GOLDEN) ^ 0x1319_8A2E_0370_7344));
        RngStream { seed, stream_id, key, counter: 0, spare_normal: None }
    }

    /// Child stream independent of the parent; does not advance the parent.
    pub fn split(&self, child_id: u64) -> Self {
        RngStream::new(self.key ^ mix64(child_id ^ 0xA409_3822_299F_31D0), child_id)
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn stream_id(&self) -> u64 {
        self.stream_id
    }

    #[inline(always)]
    pub fn next_u64(&mut self) -> u64 {
        let out = mix64(self.key ^ self.counter.wrapping_mul(GOLDEN));
        self.counter += 1;
        out
    }

    /// Uniform on the open interval (0, 1): midpoints of a 2^53 lattice.
    #[inline(always)]
    pub fn unit(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 * (1.0 / 9007199254740992.0) + (0.5 / 9007199254740992.0)
    }

    /// Standard normal via Box-Muller; the second draw of each pair is cached.
    pub fn normal(&mut self) -> f64 {
        if let Some(z) = self.spare_normal.take() {
            return z;
        }
        let u1 = self.unit();
        let u2 = self.unit();
        let r = (-2.0 * u1.ln()).sqrt();
        let theta = 2.0 * std::f64::consts::PI * u2;
        self.spare_normal = Some(r * theta.sin());
        r * theta.cos()
    }

    /// Standard exponential.
    pub fn exponential(&mut self) -> f64 {
        -self.unit().ln()
    }

    pub fn fill_normal(&mut self, out: &mut [f64]) {
        for v in out.iter_mut() {
            *v = self.normal();
        }
    }

    /// Brownian increments over a uniform grid: n i.i.d. N(0, T/n) draws.
    pub fn brownian_increments(&mut self, horizon: f64, n: usize) -> Vec<f64> {
        let sd = (horizon / n as f64).sqrt();
        (0..n).map(|_| sd * self.normal()).collect()
    }
}
