//! Built-in coefficient presets: one per scheme regime the lab exercises.

use crate::config::{ModelConfig, TypedModel};
use sdelab_core::schemes::{PairCoefficients, SignedAtomMeasure, TamedMode};
use sdelab_core::she::SheCoeff;
use sdelab_core::{Coefficient1D, SimError};
use std::sync::Arc;

pub const PRESET_NAMES: [&str; 7] = [
    "le-gall-step",
    "skew-bm",
    "cubic-tamed",
    "holder-sigma",
    "step-drift-fbm",
    "gyongy-she",
    "asian-pair",
];

pub fn describe(name: &str) -> &'static str {
    match name {
        "le-gall-step" => "two-valued diffusion in [1,2] with a bounded step drift",
        "skew-bm" => "unit diffusion with a single skew atom of weight 1/2 at the origin",
        "cubic-tamed" => "cubic mean reversion b = -x^3 with unit noise, drift taming at ell = 2",
        "holder-sigma" => "1/2-Holder diffusion sqrt(min(|x|,1)) + 1/2 with linear mean reversion",
        "step-drift-fbm" => "fractional driver (H = 0.3) with a decreasing step drift",
        "gyongy-she" => "lattice heat equation with a step drift in the field value and unit noise",
        "asian-pair" => "Brownian first component with its running integral as second component",
        _ => "",
    }
}

pub fn build(name: &str, m: &ModelConfig) -> Result<TypedModel, SimError> {
    match name {
        "le-gall-step" => Ok(TypedModel::Bm {
            drift: Coefficient1D::new("step-drift", |_, x| if x > 0.0 { 0.5 } else { 0.0 }).with_sup_bound(0.5),
            diffusion: Coefficient1D::new("step-sigma", |_, x| if x > 0.0 { 2.0 } else { 1.0 })
                .with_sup_bound(2.0)
                .with_ellipticity_floor(1.0),
            x0: m.x0,
            taming: None,
            atoms: None,
            pair: None,
        }),
        "skew-bm" => Ok(TypedModel::Bm {
            drift: Coefficient1D::zero(),
            diffusion: Coefficient1D::constant(1.0).with_ellipticity_floor(1.0),
            x0: m.x0,
            taming: None,
            atoms: Some(SignedAtomMeasure::skew(0.0, 0.75).map_err(|e| SimError::Validation(e.to_string()))?),
            pair: None,
        }),
        "cubic-tamed" => Ok(TypedModel::Bm {
            drift: Coefficient1D::new("-x^3", |_, x| -x * x * x).with_growth_exponent(2.0),
            diffusion: Coefficient1D::constant(1.0).with_ellipticity_floor(1.0),
            x0: if m.x0 == 0.0 { 2.0 } else { m.x0 },
            taming: Some((2.0, TamedMode::DriftOnly)),
            atoms: None,
            pair: None,
        }),
        "holder-sigma" => Ok(TypedModel::Bm {
            drift: Coefficient1D::new("-x", |_, x| -x).with_one_sided_lipschitz(0.0),
            diffusion: Coefficient1D::new("sqrt-step", |_, x: f64| x.abs().min(1.0).sqrt() + 0.5)
                .with_sup_bound(1.5)
                .with_ellipticity_floor(0.25),
            x0: m.x0,
            taming: Some((0.0, TamedMode::DriftOnly)),
            atoms: None,
            pair: None,
        }),
        "step-drift-fbm" => Ok(TypedModel::Fbm {
            hurst: m.hurst.unwrap_or(0.3),
            drift: Coefficient1D::new("step", |_, x| if x <= 0.0 { 0.5 } else { -0.5 })
                .with_sup_bound(0.5)
                .with_one_sided_lipschitz(0.0),
            x0: m.x0,
        }),
        "gyongy-she" => Ok(TypedModel::She {
            drift: SheCoeff::new("step-in-u", |_, _, u| if u <= 0.25 { 0.4 } else { 0.0 }),
            diffusion: SheCoeff::constant(1.0),
            initial: Arc::new(|x: f64| (std::f64::consts::PI * x).sin()),
        }),
        "asian-pair" => Ok(TypedModel::Bm {
            drift: Coefficient1D::zero(),
            diffusion: Coefficient1D::constant(1.0).with_ellipticity_floor(1.0),
            x0: m.x0,
            taming: None,
            atoms: None,
            pair: Some((PairCoefficients::new(|_, x, _| x, |_, _, _| 0.0, |_, _, _| 0.0), m.y0)),
        }),
        other => Err(SimError::Validation(format!(
            "unknown preset `{other}`; available: {}",
            PRESET_NAMES.join(", ")
        ))),
    }
}

pub fn listing() -> String {
    let mut out = String::new();
    for name in PRESET_NAMES {
        out.push_str(&format!("{name:<16} {}\n", describe(name)));
    }
    out
}
