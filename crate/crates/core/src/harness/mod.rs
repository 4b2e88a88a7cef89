//! Coupled-noise error estimation, multilevel Monte Carlo, and rate fitting.

pub mod coupled;
pub mod curves;
pub mod mlmc;

pub use coupled::{
    max_error_shape, max_functional_error, strong_error, time_avg_bv_error, weak_error, ErrorMode,
    WeakOracle,
};
pub use curves::{fit_rate, CurvePoint, ErrorCurve, ErrorKind, FittedModel, RateFit, RateModel};
pub use mlmc::{mlmc_estimate, single_level_estimate, MlmcLevel, MlmcReport};
