use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::filter::DEFAULT_LENGTH_FACTOR;
use crate::mma::MmaConfig;
use crate::trust_region::{ConstraintKind, TrConfig};
use crate::Error;

/// Material and filter constants that define the discrete problem.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelConfig {
    pub youngs_modulus: f64,
    pub poisson_ratio: f64,
    pub penal: f64,
    pub rho_min: f64,
    pub filter_length_factor: f64,
}

impl Default for ModelConfig {
    fn default() -> Self {
        RunConfig::default().model()
    }
}

/// Every tunable of a benchmark run, stored as a flat TOML table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub youngs_modulus: f64,
    pub poisson_ratio: f64,
    pub penal: f64,
    pub rho_min: f64,
    /// Helmholtz length over characteristic radius, `r / R`.
    pub filter_length_factor: f64,

    pub tau: f64,
    pub gamma1: f64,
    pub gamma2: f64,
    pub eta1: f64,
    pub eta2: f64,
    /// `Delta_max / Delta_0`.
    pub delta_max_factor: f64,
    pub nmax: usize,
    pub window: usize,
    pub max_inner: usize,
    pub termination_tol: f64,
    pub add_rejected_snapshots: bool,
    pub certify_bounds: bool,

    pub asymptote_init: f64,
    pub asymptote_expand: f64,
    pub asymptote_contract: f64,
    pub asymptote_min: f64,
    pub asymptote_max: f64,
    pub move_limit: f64,

    /// Major iterations of optimizer runs.
    pub max_iters: usize,
    /// HDM-MMA iterations that define the reference value `J*`.
    pub reference_iters: usize,
    pub nu: f64,
    pub epsilons: Vec<f64>,
    /// End optimizer runs once the tightest cutoff is reached.
    pub stop_at_cutoff: bool,
    /// Write density snapshots every this many iterations (0 disables).
    pub snapshot_every: usize,
    /// Recorded for reproducibility; every algorithm is deterministic.
    pub seed: u64,
}

impl Default for RunConfig {
    fn default() -> Self {
        let mma = MmaConfig::default();
        Self {
            youngs_modulus: 1.0,
            poisson_ratio: 0.3,
            penal: 3.0,
            rho_min: 1e-3,
            filter_length_factor: DEFAULT_LENGTH_FACTOR,
            tau: 0.1,
            gamma1: 0.5,
            gamma2: 1.0,
            eta1: 0.1,
            eta2: 0.75,
            delta_max_factor: 100.0,
            nmax: 19,
            window: 20,
            max_inner: 50,
            termination_tol: 1e-6,
            add_rejected_snapshots: true,
            certify_bounds: false,
            asymptote_init: mma.asymptote_init,
            asymptote_expand: mma.asymptote_expand,
            asymptote_contract: mma.asymptote_contract,
            asymptote_min: mma.asymptote_min,
            asymptote_max: mma.asymptote_max,
            move_limit: mma.move_limit,
            max_iters: 500,
            reference_iters: 2000,
            nu: 0.01,
            epsilons: vec![0.01, 0.001],
            stop_at_cutoff: true,
            snapshot_every: 0,
            seed: 0,
        }
    }
}

impl RunConfig {
    pub fn from_toml_str(text: &str) -> Result<Self, Error> {
        let cfg: Self = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, Error> {
        Self::from_toml_str(&std::fs::read_to_string(path)?)
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string(self).expect("flat config always serializes")
    }

    pub fn validate(&self) -> Result<(), Error> {
        let bad = |m: String| Err(Error::Config(m));
        if !(self.tau > 0.0) {
            return bad(format!("tau must be positive, got {}", self.tau));
        }
        if !(0.0 < self.gamma1 && self.gamma1 <= self.gamma2 && self.gamma2 <= 1.0) {
            return bad("need 0 < gamma1 <= gamma2 <= 1".into());
        }
        if !(0.0 < self.eta1 && self.eta1 < self.eta2 && self.eta2 < 1.0) {
            return bad("need 0 < eta1 < eta2 < 1".into());
        }
        if !(self.delta_max_factor >= 1.0) {
            return bad("delta_max_factor must be >= 1".into());
        }
        if self.window == 0 {
            return bad("window must be positive".into());
        }
        if !(self.nu >= 0.0) {
            return bad("nu must be non-negative".into());
        }
        if self.epsilons.iter().any(|e| !(*e > 0.0)) {
            return bad("epsilons must be positive".into());
        }
        Ok(())
    }

    pub fn model(&self) -> ModelConfig {
        ModelConfig {
            youngs_modulus: self.youngs_modulus,
            poisson_ratio: self.poisson_ratio,
            penal: self.penal,
            rho_min: self.rho_min,
            filter_length_factor: self.filter_length_factor,
        }
    }

    pub fn mma(&self) -> MmaConfig {
        MmaConfig {
            asymptote_init: self.asymptote_init,
            asymptote_expand: self.asymptote_expand,
            asymptote_contract: self.asymptote_contract,
            asymptote_min: self.asymptote_min,
            asymptote_max: self.asymptote_max,
            move_limit: self.move_limit,
        }
    }

    pub fn trust_region(&self, kind: ConstraintKind, adaptive: bool) -> TrConfig {
        TrConfig {
            gamma1: self.gamma1,
            gamma2: self.gamma2,
            eta1: self.eta1,
            eta2: self.eta2,
            delta_max_factor: self.delta_max_factor,
            tau: self.tau,
            kind,
            adaptive,
            termination_tol: self.termination_tol,
            max_iters: self.max_iters,
            max_inner: self.max_inner,
            nmax: self.nmax,
            window: self.window,
            add_rejected_snapshots: self.add_rejected_snapshots,
            certify_bounds: self.certify_bounds,
            mma: self.mma(),
        }
    }
}
