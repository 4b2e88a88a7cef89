//! Error curves over discretization levels and least-squares rate fits
//! against power-law and logarithmic decay models.

use crate::error::{Result, SimError};
use serde::Serialize;
use std::io::Write;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum ErrorKind {
    StrongSup,
    StrongTerminal,
    Weak,
    TimeAveragedBv,
    MaxFunctional,
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct CurvePoint {
    pub n: usize,
    pub error: f64,
    pub stderr: f64,
    pub paths: usize,
    pub diverged: usize,
}

#[derive(Debug, Clone, Serialize)]
pub struct ErrorCurve {
    pub kind: ErrorKind,
    pub moment_order: f64,
    pub points: Vec<CurvePoint>,
    pub seed: u64,
    pub scheme_id: String,
    pub paths_requested: usize,
}

impl ErrorCurve {
    pub fn ns(&self) -> Vec<f64> {
        self.points.iter().map(|p| p.n as f64).collect()
    }

    pub fn errors(&self) -> Vec<f64> {
        self.points.iter().map(|p| p.error).collect()
    }

    /// Nonincreasing within `k` pooled standard errors between neighbours.
    pub fn is_monotone_within(&self, k: f64) -> bool {
        self.points.windows(2).all(|w| {
            let pooled = (w[0].stderr.powi(2) + w[1].stderr.powi(2)).sqrt();
            w[1].error <= w[0].error + k * pooled
        })
    }

    pub fn write_csv(&self, out: &mut impl Write) -> std::io::Result<()> {
        writeln!(out, "n,error,stderr,paths,diverged")?;
        for p in &self.points {
            writeln!(out, "{},{},{},{},{}", p.n, p.error, p.stderr, p.paths, p.diverged)?;
        }
        Ok(())
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("curve serialization")
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum RateModel {
    Power,
    Log,
    Auto,
}

#[derive(Debug, Clone, Copy, Serialize)]
pub enum FittedModel {
    /// e = C n^{-rate}
    Power { c: f64, rate: f64 },
    /// e = C (log n)^{-exponent}
    Log { c: f64, exponent: f64 },
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct RateFit {
    pub model: FittedModel,
    pub rss: f64,
    pub r_squared: f64,
}

impl RateFit {
    pub fn rate(&self) -> f64 {
        match self.model {
            FittedModel::Power { rate, .. } => rate,
            FittedModel::Log { exponent, .. } => exponent,
        }
    }

    pub fn amplitude(&self) -> f64 {
        match self.model {
            FittedModel::Power { c, .. } | FittedModel::Log { c, .. } => c,
        }
    }
}

fn least_squares(xs: &[f64], ys: &[f64]) -> (f64, f64, f64, f64) {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let mut sxx = 0.0;
    let mut sxy = 0.0;
    for i in 0..xs.len() {
        sxx += (xs[i] - mx) * (xs[i] - mx);
        sxy += (xs[i] - mx) * (ys[i] - my);
    }
    let slope = if sxx > 0.0 { sxy / sxx } else { 0.0 };
    let intercept = my - slope * mx;
    let mut rss = 0.0;
    let mut tss = 0.0;
    for i in 0..xs.len() {
        let r = ys[i] - (intercept + slope * xs[i]);
        rss += r * r;
        tss += (ys[i] - my) * (ys[i] - my);
    }
    let r2 = if tss > 0.0 { 1.0 - rss / tss } else { 1.0 };
    (intercept, slope, rss, r2)
}

/// Least squares on (log n, log e) for the power model and on
/// (log log n, log e) for the log model; Auto keeps the higher R^2.
pub fn fit_rate(ns: &[f64], errors: &[f64], model: RateModel) -> Result<RateFit> {
    if ns.len() != errors.len() || ns.len() < 3 {
        return Err(SimError::domain("fit_rate", "need at least 3 matching points"));
    }
    if errors.iter().any(|e| !(*e > 0.0)) {
        return Err(SimError::domain("fit_rate", "errors must be strictly positive"));
    }
    if ns.iter().any(|n| !(*n > 1.0)) {
        return Err(SimError::domain("fit_rate", "levels must exceed 1"));
    }
    let ys: Vec<f64> = errors.iter().map(|e| e.ln()).collect();
    let power = {
        let xs: Vec<f64> = ns.iter().map(|n| n.ln()).collect();
        let (a, b, rss, r2) = least_squares(&xs, &ys);
        RateFit { model: FittedModel::Power { c: a.exp(), rate: -b }, rss, r_squared: r2 }
    };
    let log = {
        let xs: Vec<f64> = ns.iter().map(|n| n.ln().ln()).collect();
        let (a, b, rss, r2) = least_squares(&xs, &ys);
        RateFit { model: FittedModel::Log { c: a.exp(), exponent: -b }, rss, r_squared: r2 }
    };
    Ok(match model {
        RateModel::Power => power,
        RateModel::Log => log,
        RateModel::Auto => {
            if log.r_squared > power.r_squared {
                log
            } else {
                power
            }
        }
    })
}
