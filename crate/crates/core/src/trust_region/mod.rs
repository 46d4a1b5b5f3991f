//! Error-aware trust-region method driven by on-the-fly reduced-order models.

mod driver;
mod projection;
mod subproblem;

pub use driver::{
    constraint_value, initial_radius, TrIterationRecord, TrStatus, TrustRegion, CENTER_GRAD_TOL,
    CENTER_RESIDUAL_TOL, CENTER_VALUE_TOL, FCD_KAPPA, FCD_KAPPA_PRIME,
};
pub use projection::{criticality_chi, project, termination_measure};
pub use subproblem::{solve_subproblem, tr_constraint, SubproblemResult};

use crate::mma::MmaConfig;

/// Trust-region constraint `theta_k`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ConstraintKind {
    /// Full-space residual norm of the reduced state.
    Residual,
    /// Euclidean distance to the center.
    Distance,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrConfig {
    pub gamma1: f64,
    pub gamma2: f64,
    pub eta1: f64,
    pub eta2: f64,
    /// `Delta_max / Delta_0`.
    pub delta_max_factor: f64,
    pub tau: f64,
    pub kind: ConstraintKind,
    /// `false` accepts every step and keeps the radius fixed.
    pub adaptive: bool,
    pub termination_tol: f64,
    pub max_iters: usize,
    pub max_inner: usize,
    pub nmax: usize,
    pub window: usize,
    pub add_rejected_snapshots: bool,
    pub certify_bounds: bool,
    pub mma: MmaConfig,
}
