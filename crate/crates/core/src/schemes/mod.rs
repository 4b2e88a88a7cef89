//! Time-stepping schemes driven by Brownian motion.

pub mod em;
pub mod scale;
pub mod singular;
pub mod tamed;

pub use em::{
    aggregate_increments, coupled_system_em, em_bridge_value, em_cell_max, em_path, CoupledIncrements,
    EmConfig, PairCoefficients,
};
pub use scale::ScaleTransform;
pub use singular::{singular_sde_scheme, SignedAtomMeasure, SingularPaths};
pub use tamed::{holder_tamed_rate, tamed_coefficients, tamed_em_path, tamed_strong_rate, TamedConfig, TamedMode};

use crate::error::{Result, SimError};

/// Maximum of a path over its grid nodes.
pub fn discrete_max(path: &[f64]) -> Result<f64> {
    if path.is_empty() {
        return Err(SimError::domain("discrete_max", "empty path"));
    }
    Ok(path.iter().fold(f64::NEG_INFINITY, |a, &b| a.max(b)))
}
