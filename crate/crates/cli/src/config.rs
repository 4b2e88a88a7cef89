//! Experiment configuration: a TOML document validated into a typed plan
//! before any simulation starts. Unknown keys are rejected with the key name.

use crate::expr;
use crate::presets;
use sdelab_core::schemes::{PairCoefficients, SignedAtomMeasure, TamedMode};
use sdelab_core::she::SheCoeff;
use sdelab_core::{Coefficient1D, SimError};
use serde::{Deserialize, Serialize};
use std::fmt;
use std::sync::Arc;

pub fn default_seed() -> u64 {
    42
}

fn default_paths() -> usize {
    10_000
}

fn default_horizon() -> f64 {
    1.0
}

fn default_q() -> f64 {
    1.0
}

fn default_samples() -> usize {
    8
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ExperimentKind {
    StrongRate,
    WeakRate,
    AvikainenVerify,
    Mlmc,
    SheRate,
    MaxFunctional,
    TimeAvgBv,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Driver {
    Bm,
    Stable,
    Fbm,
    She,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum Taming {
    #[default]
    None,
    DriftOnly,
    DriftAndDiffusion,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelConfig {
    pub driver: Driver,
    #[serde(default)]
    pub preset: Option<String>,
    #[serde(default)]
    pub drift: Option<String>,
    #[serde(default)]
    pub diffusion: Option<String>,
    #[serde(default)]
    pub x0: f64,
    #[serde(default = "default_horizon")]
    pub horizon: f64,
    #[serde(default)]
    pub alpha: Option<f64>,
    #[serde(default)]
    pub hurst: Option<f64>,
    #[serde(default)]
    pub ell: f64,
    #[serde(default)]
    pub taming: Taming,
    /// Skew atoms (location, weight) for local-time equations.
    #[serde(default)]
    pub atoms: Option<Vec<(f64, f64)>>,
    #[serde(default)]
    pub sup_bound: Option<f64>,
    #[serde(default)]
    pub ellipticity_floor: Option<f64>,
    /// Second component of a decoupled pair: Y reads (t, X, Y).
    #[serde(default)]
    pub pair: bool,
    #[serde(default)]
    pub y0: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
#[derive(Default)]
pub struct GridConfig {
    #[serde(default)]
    pub n_list: Option<Vec<usize>>,
    #[serde(default)]
    pub n_ref: Option<usize>,
    /// Time-step counts paired with n_list for lattice runs.
    #[serde(default)]
    pub m_list: Option<Vec<usize>>,
    #[serde(default)]
    pub override_cfl: bool,
}


#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum ErrorModeCfg {
    #[default]
    Terminal,
    Sup,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ErrorConfig {
    #[serde(default)]
    pub p: Option<f64>,
    #[serde(default = "default_q")]
    pub q: f64,
    #[serde(default)]
    pub mode: ErrorModeCfg,
    #[serde(default = "default_samples")]
    pub samples_per_path: usize,
}

impl Default for ErrorConfig {
    fn default() -> Self {
        ErrorConfig { p: None, q: default_q(), mode: ErrorModeCfg::Terminal, samples_per_path: default_samples() }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PayoffKind {
    IndicatorAbove,
    IndicatorBelow,
    Sign,
    Identity,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PayoffConfig {
    pub kind: PayoffKind,
    #[serde(default)]
    pub threshold: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MlmcConfig {
    #[serde(default = "default_n0")]
    pub n0: usize,
    #[serde(default = "default_levels")]
    pub levels: usize,
    #[serde(default)]
    pub paths_per_level: Option<usize>,
}

fn default_n0() -> usize {
    4
}

fn default_levels() -> usize {
    4
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum OutputFormat {
    Csv,
    Json,
    #[default]
    Both,
}

#[derive(Debug, Clone, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct OutputConfig {
    #[serde(default)]
    pub dir: Option<String>,
    #[serde(default)]
    pub format: OutputFormat,
    #[serde(default)]
    pub write_field: bool,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub kind: ExperimentKind,
    #[serde(default = "default_seed")]
    pub seed: u64,
    #[serde(default = "default_paths")]
    pub paths: usize,
    #[serde(default)]
    pub threads: Option<usize>,
    pub model: ModelConfig,
    #[serde(default)]
    pub grid: GridConfig,
    #[serde(default)]
    pub error: ErrorConfig,
    #[serde(default)]
    pub payoff: Option<PayoffConfig>,
    #[serde(default)]
    pub mlmc: Option<MlmcConfig>,
    #[serde(default)]
    pub output: OutputConfig,
}

impl ExperimentConfig {
    pub fn parse(text: &str) -> Result<Self, SimError> {
        toml::from_str(text).map_err(|e| SimError::Validation(e.to_string()))
    }

    pub fn to_toml(&self) -> String {
        toml::to_string_pretty(self).expect("config serialization")
    }

    /// Content hash of the canonical serialized config, FNV-1a 64.
    pub fn hash(&self) -> String {
        let text = serde_json::to_string(self).expect("config serialization");
        let mut h: u64 = 0xcbf29ce484222325;
        for b in text.bytes() {
            h ^= b as u64;
            h = h.wrapping_mul(0x100000001b3);
        }
        format!("{h:016x}")
    }
}

/// Fully resolved model ready to simulate.
#[allow(clippy::large_enum_variant)]
pub enum TypedModel {
    Bm {
        drift: Coefficient1D,
        diffusion: Coefficient1D,
        x0: f64,
        taming: Option<(f64, TamedMode)>,
        atoms: Option<SignedAtomMeasure>,
        pair: Option<(PairCoefficients, f64)>,
    },
    Stable {
        alpha: f64,
        diffusion: Coefficient1D,
        x0: f64,
    },
    Fbm {
        hurst: f64,
        drift: Coefficient1D,
        x0: f64,
    },
    She {
        drift: SheCoeff,
        diffusion: SheCoeff,
        initial: Arc<dyn Fn(f64) -> f64 + Send + Sync>,
    },
}

impl fmt::Debug for TypedModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TypedModel::Bm { taming, atoms, pair, .. } => f
                .debug_struct("Bm")
                .field("tamed", &taming.is_some())
                .field("atoms", &atoms.is_some())
                .field("pair", &pair.is_some())
                .finish(),
            TypedModel::Stable { alpha, .. } => f.debug_struct("Stable").field("alpha", alpha).finish(),
            TypedModel::Fbm { hurst, .. } => f.debug_struct("Fbm").field("hurst", hurst).finish(),
            TypedModel::She { .. } => f.debug_struct("She").finish(),
        }
    }
}

#[derive(Debug)]
pub struct Plan {
    pub kind: ExperimentKind,
    pub seed: u64,
    pub paths: usize,
    pub threads: usize,
    pub horizon: f64,
    pub model: TypedModel,
    pub model_id: String,
    pub n_list: Vec<usize>,
    pub n_ref: usize,
    pub m_list: Vec<usize>,
    pub override_cfl: bool,
    pub p: f64,
    pub q: f64,
    pub mode: ErrorModeCfg,
    pub samples_per_path: usize,
    pub payoff: Option<PayoffConfig>,
    pub mlmc: MlmcConfig,
    pub format: OutputFormat,
    pub write_field: bool,
    pub config_hash: String,
    /// Non-fatal notes surfaced in the summary (flagged regimes).
    pub warnings: Vec<String>,
}

fn coefficient_from_expr(id: &str, src: &str) -> Result<Coefficient1D, SimError> {
    let e = expr::parse(src).map_err(|pe| SimError::Validation(format!("{id}: {pe}")))?;
    Ok(Coefficient1D::new(format!("{id}:{src}"), move |t, x| e.eval(t, x)))
}

fn she_coeff_from_expr(id: &str, src: &str) -> Result<SheCoeff, SimError> {
    let e = expr::parse(src).map_err(|pe| SimError::Validation(format!("{id}: {pe}")))?;
    // in lattice coefficients the expression's `x` denotes the field value
    Ok(SheCoeff::new(format!("{id}:{src}"), move |t, _x, u| e.eval(t, u)))
}

pub fn validate(cfg: &ExperimentConfig) -> Result<Plan, SimError> {
    let mut warnings = Vec::new();
    if !(cfg.model.horizon > 0.0) {
        return Err(SimError::Validation("model.horizon must be positive".into()));
    }
    if cfg.paths == 0 {
        return Err(SimError::Validation("paths must be >= 1".into()));
    }

    // resolve the model, either from a preset or from expressions
    let (model, model_id) = if let Some(name) = &cfg.model.preset {
        if cfg.model.drift.is_some() || cfg.model.diffusion.is_some() {
            return Err(SimError::Validation(
                "give either model.preset or explicit coefficient expressions, not both".into(),
            ));
        }
        (presets::build(name, &cfg.model)?, name.clone())
    } else {
        (build_explicit_model(&cfg.model)?, format!("{:?}", cfg.model.driver).to_lowercase())
    };

    // grid defaults and divisibility
    let n_list = cfg.grid.n_list.clone().unwrap_or_else(|| vec![16, 32, 64, 128, 256]);
    if n_list.is_empty() || n_list.windows(2).any(|w| w[0] >= w[1]) {
        return Err(SimError::Validation("grid.n_list must be nonempty and strictly increasing".into()));
    }
    let n_max = *n_list.last().unwrap();
    let n_ref = cfg.grid.n_ref.unwrap_or(4 * n_max);
    for &n in &n_list {
        if !n_ref.is_multiple_of(n) {
            return Err(SimError::Validation(format!(
                "grid.n_ref = {n_ref} is not a common refinement of n = {n}"
            )));
        }
    }

    // driver-specific domain checks
    let p = match &model {
        TypedModel::Stable { alpha, .. } => {
            let p = cfg.error.p.unwrap_or(alpha - 1.0);
            if p >= *alpha {
                return Err(SimError::Validation(format!(
                    "error moment order p = {p} >= alpha = {alpha}: those moments are infinite for a stable driver"
                )));
            }
            p
        }
        TypedModel::Fbm { hurst, .. } => {
            if *hurst >= 0.5 {
                warnings.push(format!("Hurst {hurst} >= 1/2 is outside the scheme's rate theory"));
            }
            cfg.error.p.unwrap_or(2.0)
        }
        _ => cfg.error.p.unwrap_or(2.0),
    };
    if !(p > 0.0) {
        return Err(SimError::Validation("error.p must be positive".into()));
    }
    if cfg.error.q < 1.0 {
        return Err(SimError::Validation("error.q must be >= 1".into()));
    }

    // lattice grids: m paired with n, stability checked unless overridden
    let m_list = match (&cfg.model.driver, &cfg.grid.m_list) {
        (Driver::She, Some(ms)) => {
            if ms.len() != n_list.len() {
                return Err(SimError::Validation("grid.m_list must pair with grid.n_list".into()));
            }
            ms.clone()
        }
        (Driver::She, None) => n_list
            .iter()
            .map(|&n| (2.0 * cfg.model.horizon * (n * n) as f64).ceil() as usize * 2)
            .collect(),
        _ => Vec::new(),
    };
    if matches!(cfg.model.driver, Driver::She) && !cfg.grid.override_cfl {
        for (&m, &n) in m_list.iter().zip(&n_list) {
            if (m as f64) < 2.0 * cfg.model.horizon * (n * n) as f64 {
                return Err(SimError::Validation(format!(
                    "lattice (m = {m}, n = {n}) violates the stability bound m >= 2 T n^2 = {}; set grid.override_cfl to run anyway",
                    2.0 * cfg.model.horizon * (n * n) as f64
                )));
            }
        }
    }

    // experiment-kind requirements
    match cfg.kind {
        ExperimentKind::Mlmc | ExperimentKind::MaxFunctional | ExperimentKind::TimeAvgBv | ExperimentKind::AvikainenVerify => {
            if cfg.payoff.is_none() {
                return Err(SimError::Validation(format!("{:?} requires a [payoff] block", cfg.kind)));
            }
        }
        ExperimentKind::WeakRate
            if cfg.payoff.is_none() => {
                return Err(SimError::Validation("weak-rate requires a [payoff] block".into()));
            }
        _ => {}
    }
    match (cfg.kind, &cfg.model.driver) {
        (ExperimentKind::SheRate, Driver::She) => {}
        (ExperimentKind::SheRate, other) => {
            return Err(SimError::Validation(format!("she-rate requires driver = \"she\", got {other:?}")));
        }
        (_, Driver::She) if cfg.kind != ExperimentKind::SheRate => {
            return Err(SimError::Validation("the she driver only supports kind = \"she-rate\"".into()));
        }
        _ => {}
    }

    Ok(Plan {
        kind: cfg.kind,
        seed: cfg.seed,
        paths: cfg.paths,
        threads: cfg.threads.unwrap_or_else(default_thread_count),
        horizon: cfg.model.horizon,
        model,
        model_id,
        n_list,
        n_ref,
        m_list,
        override_cfl: cfg.grid.override_cfl,
        p,
        q: cfg.error.q,
        mode: cfg.error.mode,
        samples_per_path: cfg.error.samples_per_path,
        payoff: cfg.payoff.clone(),
        mlmc: cfg.mlmc.clone().unwrap_or(MlmcConfig { n0: 4, levels: 4, paths_per_level: None }),
        format: cfg.output.format,
        write_field: cfg.output.write_field,
        config_hash: cfg.hash(),
        warnings,
    })
}

/// Thread count from the environment, one worker per logical CPU otherwise.
pub fn default_thread_count() -> usize {
    std::env::var("SDELAB_THREADS")
        .ok()
        .and_then(|v| v.parse().ok())
        .unwrap_or_else(|| std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1))
}

fn build_explicit_model(m: &ModelConfig) -> Result<TypedModel, SimError> {
    match m.driver {
        Driver::Bm => {
            let drift = match &m.drift {
                Some(src) => coefficient_from_expr("drift", src)?,
                None => Coefficient1D::zero(),
            };
            let mut diffusion = match &m.diffusion {
                Some(src) => coefficient_from_expr("diffusion", src)?,
                None => Coefficient1D::constant(1.0),
            };
            if let Some(b) = m.sup_bound {
                diffusion = diffusion.with_sup_bound(b);
            }
            if let Some(f) = m.ellipticity_floor {
                diffusion = diffusion.with_ellipticity_floor(f);
            }
            let taming = match m.taming {
                Taming::None => None,
                Taming::DriftOnly => Some((m.ell, TamedMode::DriftOnly)),
                Taming::DriftAndDiffusion => Some((m.ell, TamedMode::DriftAndDiffusion)),
            };
            if m.ell < 0.0 {
                return Err(SimError::Validation("model.ell must be >= 0".into()));
            }
            let atoms = match &m.atoms {
                Some(list) => Some(SignedAtomMeasure::new(list.clone()).map_err(|e| SimError::Validation(e.to_string()))?),
                None => None,
            };
            if atoms.is_some() && (diffusion.sup_bound.is_none() || diffusion.ellipticity_floor.is_none()) {
                return Err(SimError::Validation(
                    "skew atoms require model.sup_bound and model.ellipticity_floor on the diffusion".into(),
                ));
            }
            let pair = if m.pair {
                // integrated-state pair: Y accumulates X
                let pc = PairCoefficients::new(|_, x, _| x, |_, _, _| 0.0, |_, _, _| 0.0);
                Some((pc, m.y0))
            } else {
                None
            };
            Ok(TypedModel::Bm { drift, diffusion, x0: m.x0, taming, atoms, pair })
        }
        Driver::Stable => {
            let alpha = m.alpha.ok_or_else(|| SimError::Validation("stable driver requires model.alpha".into()))?;
            if !(alpha > 1.0 && alpha <= 2.0) {
                return Err(SimError::Validation(format!("model.alpha = {alpha} outside (1, 2]")));
            }
            let mut diffusion = match &m.diffusion {
                Some(src) => coefficient_from_expr("diffusion", src)?,
                None => Coefficient1D::constant(1.0),
            };
            diffusion = diffusion
                .with_sup_bound(m.sup_bound.unwrap_or(1.0))
                .with_ellipticity_floor(m.ellipticity_floor.unwrap_or(1.0));
            Ok(TypedModel::Stable { alpha, diffusion, x0: m.x0 })
        }
        Driver::Fbm => {
            let hurst = m.hurst.ok_or_else(|| SimError::Validation("fbm driver requires model.hurst".into()))?;
            if !(hurst > 0.0 && hurst < 1.0) {
                return Err(SimError::Validation(format!("model.hurst = {hurst} outside (0, 1)")));
            }
            let drift = match &m.drift {
                Some(src) => coefficient_from_expr("drift", src)?,
                None => Coefficient1D::zero(),
            };
            Ok(TypedModel::Fbm { hurst, drift, x0: m.x0 })
        }
        Driver::She => {
            let drift = match &m.drift {
                Some(src) => she_coeff_from_expr("drift", src)?,
                None => SheCoeff::zero(),
            };
            let diffusion = match &m.diffusion {
                Some(src) => she_coeff_from_expr("diffusion", src)?,
                None => SheCoeff::zero(),
            };
            Ok(TypedModel::She {
                drift,
                diffusion,
                initial: Arc::new(|x: f64| (std::f64::consts::PI * x).sin()),
            })
        }
    }
}
