use std::sync::Arc;

use crate::hdm::{norm, Hdm, HdmSolution};
use crate::mma::VolumeConstraint;
use crate::rom::{build_basis, truncation_size, BoundMode, Rom, SnapshotWindow};
use crate::Error;

use super::subproblem::{solve_subproblem, tr_constraint};
use super::{criticality_chi, termination_measure, ConstraintKind, TrConfig};

/// Model exactness at the center is checked against these relative levels.
pub const CENTER_VALUE_TOL: f64 = 1e-8;
pub const CENTER_GRAD_TOL: f64 = 1e-6;
pub const CENTER_RESIDUAL_TOL: f64 = 1e-9;

/// Constants of the fraction-of-Cauchy-decrease diagnostic.
pub const FCD_KAPPA: f64 = 1e-4;
pub const FCD_KAPPA_PRIME: f64 = 1.0;

/// Everything observed during one major iteration.
#[derive(Debug, Clone, PartialEq)]
pub struct TrIterationRecord {
    /// 1-based major iteration.
    pub iteration: usize,
    /// Radius used by this iteration's subproblem.
    pub delta: f64,
    pub basis_dim: usize,
    pub center_objective: f64,
    pub center_stationarity: f64,
    /// `|J_k - J| / |J|` at the center.
    pub center_value_error: f64,
    /// `|grad J_k - grad J| / |grad J|` at the center.
    pub center_grad_error: f64,
    /// `theta_k(center) / |f|` for the residual constraint, else 0.
    pub center_residual: f64,
    pub model_center: f64,
    pub model_candidate: f64,
    /// `theta_k` at the candidate.
    pub candidate_theta: f64,
    /// Largest violation of the box or volume constraint at the candidate.
    pub candidate_violation: f64,
    /// `None` when the subproblem did not move and no HDM solve was made.
    pub candidate_objective: Option<f64>,
    pub ratio: Option<f64>,
    pub accepted: bool,
    /// Radius after the update.
    pub next_delta: f64,
    pub inner_steps: usize,
    pub backtracked: bool,
    /// Model decrease over `kappa chi min(chi / beta, kappa' Delta, 1)`.
    pub cauchy_ratio: Option<f64>,
    /// `sigma_min^{-1} |r|^2` at the candidate, when bounds are certified.
    pub certified_bound: Option<f64>,
    /// Cumulative solve counts after this iteration.
    pub hdm_total: usize,
    pub rom_total: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TrStatus {
    Running,
    Converged,
    /// The radius collapsed, or a non-adaptive run stopped moving.
    Stalled,
    MaxIterations,
}

/// Initial radius: `tau |f|` for the residual constraint, `tau |psi_0|`
/// for the distance constraint.
pub fn initial_radius(kind: ConstraintKind, tau: f64, load: &[f64], psi0: &[f64]) -> f64 {
    match kind {
        ConstraintKind::Residual => tau * norm(load),
        ConstraintKind::Distance => tau * norm(psi0),
    }
}

/// Trust-region optimizer state. Each call of [`TrustRegion::step`] runs
/// one major iteration.
#[derive(Debug)]
pub struct TrustRegion {
    hdm: Hdm,
    config: TrConfig,
    constraint: VolumeConstraint,
    window: SnapshotWindow,
    center: Vec<f64>,
    center_sol: HdmSolution,
    center_grad: Vec<f64>,
    center_in_window: bool,
    delta: f64,
    delta0: f64,
    delta_max: f64,
    iteration: usize,
    status: TrStatus,
    history: Vec<TrIterationRecord>,
}

impl TrustRegion {
    /// Evaluates the HDM at `psi0`, which becomes the first center.
    pub fn new(hdm: Hdm, psi0: &[f64], config: TrConfig) -> Result<Self, Error> {
        let problem = hdm.problem().clone();
        let constraint = VolumeConstraint::new(problem.volume_weights(), problem.volume)?;
        crate::fem::check_len(problem.elem_count(), psi0.len())?;
        if !constraint.is_feasible(psi0, 1e-9) {
            return Err(Error::InvalidInput("initial design is infeasible".into()));
        }
        let delta0 = initial_radius(config.kind, config.tau, &problem.load, psi0);
        if !(delta0 > 0.0) {
            return Err(Error::InvalidInput(format!("initial radius {delta0} is not positive")));
        }
        let (center_sol, center_grad) = hdm.evaluate(psi0)?;
        Ok(Self {
            window: SnapshotWindow::new(config.window),
            delta_max: config.delta_max_factor * delta0,
            delta: delta0,
            delta0,
            hdm,
            constraint,
            center: psi0.to_vec(),
            center_sol,
            center_grad,
            center_in_window: false,
            iteration: 0,
            status: TrStatus::Running,
            history: Vec::new(),
            config,
        })
    }

    pub fn hdm(&self) -> &Hdm {
        &self.hdm
    }

    pub fn config(&self) -> &TrConfig {
        &self.config
    }

    pub fn center(&self) -> &[f64] {
        &self.center
    }

    pub fn center_solution(&self) -> &HdmSolution {
        &self.center_sol
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }

    pub fn delta0(&self) -> f64 {
        self.delta0
    }

    pub fn delta_max(&self) -> f64 {
        self.delta_max
    }

    pub fn status(&self) -> TrStatus {
        self.status
    }

    pub fn history(&self) -> &[TrIterationRecord] {
        &self.history
    }

    pub fn constraint(&self) -> &VolumeConstraint {
        &self.constraint
    }

    /// Runs until termination or `max_iters` major iterations.
    pub fn run(&mut self) -> Result<TrStatus, Error> {
        while self.step()?.is_some() {}
        Ok(self.status)
    }

    /// One major iteration; `None` once the method has stopped.
    pub fn step(&mut self) -> Result<Option<&TrIterationRecord>, Error> {
        if self.status != TrStatus::Running {
            return Ok(None);
        }
        let stationarity = termination_measure(&self.center, &self.center_grad, &self.constraint);
        if stationarity <= self.config.termination_tol {
            self.status = TrStatus::Converged;
            return Ok(None);
        }
        if self.iteration >= self.config.max_iters {
            self.status = TrStatus::MaxIterations;
            return Ok(None);
        }
        self.iteration += 1;
        let cfg = &self.config;
        let n = truncation_size(self.iteration, cfg.nmax, self.window.len());
        let basis = build_basis(&self.hdm, &self.window, n, &self.center_sol.u, &self.center_sol.lambda)?;
        if !self.center_in_window {
            self.window.push(self.center_sol.u.clone(), self.center_sol.lambda.clone());
            self.center_in_window = true;
        }
        let rom = Rom::new(self.hdm.clone(), Arc::new(basis))?;

        let rom_c = rom.solve(&self.center)?;
        let g_c = rom.gradient(&self.center, &rom_c)?;
        let j_c = self.center_sol.value;
        let value_err = (rom_c.value - j_c).abs() / j_c.abs().max(f64::MIN_POSITIVE);
        let dg: Vec<f64> = g_c.iter().zip(&self.center_grad).map(|(a, b)| a - b).collect();
        let grad_err = norm(&dg) / norm(&self.center_grad).max(f64::MIN_POSITIVE);
        let f_norm = norm(&self.hdm.problem().load);
        let center_residual = match cfg.kind {
            ConstraintKind::Residual => rom.residual_norm(&rom_c)? / f_norm,
            ConstraintKind::Distance => 0.0,
        };
        if value_err > CENTER_VALUE_TOL || grad_err > CENTER_GRAD_TOL || center_residual > CENTER_RESIDUAL_TOL {
            log::warn!(
                "model not exact at center {}: value {value_err:.2e}, gradient {grad_err:.2e}, residual {center_residual:.2e}",
                self.iteration
            );
        }

        let sub = solve_subproblem(
            &rom,
            cfg.kind,
            &self.center,
            rom_c.value,
            &g_c,
            self.delta,
            &self.constraint,
            cfg.max_inner,
            &cfg.mma,
        )?;
        let pred = rom_c.value - sub.model_value;
        let cauchy_ratio = criticality_chi(&self.center, &g_c, &self.constraint).map(|chi| {
            let denom = FCD_KAPPA * chi * (chi / sub.beta_estimate).min(FCD_KAPPA_PRIME * self.delta).min(1.0);
            if denom > 0.0 {
                pred / denom
            } else {
                f64::INFINITY
            }
        });

        let moved = sub.moved(&self.center) && pred > 1e-14 * rom_c.value.abs().max(1.0);
        let mut record = TrIterationRecord {
            iteration: self.iteration,
            delta: self.delta,
            basis_dim: rom.basis().dim(),
            center_objective: j_c,
            center_stationarity: stationarity,
            center_value_error: value_err,
            center_grad_error: grad_err,
            center_residual,
            model_center: rom_c.value,
            model_candidate: sub.model_value,
            candidate_theta: sub.theta,
            candidate_violation: violation(&sub.psi, &self.constraint),
            candidate_objective: None,
            ratio: None,
            accepted: false,
            next_delta: self.delta,
            inner_steps: sub.inner_steps,
            backtracked: sub.backtracked,
            cauchy_ratio,
            certified_bound: None,
            hdm_total: 0,
            rom_total: 0,
        };

        if !moved {
            if cfg.adaptive {
                self.delta *= cfg.gamma1;
                if self.delta < 1e-12 * self.delta0 {
                    self.status = TrStatus::Stalled;
                }
            } else {
                self.status = TrStatus::Stalled;
            }
        } else {
            if cfg.certify_bounds {
                let cand = rom.solve(&sub.psi)?;
                record.certified_bound = rom.error_bounds(&cand, BoundMode::Certified)?.compliance_error_bound;
            }
            let (sol, grad) = self.hdm.evaluate(&sub.psi)?;
            let ratio = (j_c - sol.value) / pred;
            record.candidate_objective = Some(sol.value);
            record.ratio = Some(ratio);
            let accept = !cfg.adaptive || ratio >= cfg.eta1;
            if cfg.adaptive {
                self.delta = if ratio < cfg.eta1 {
                    cfg.gamma1 * self.delta
                } else if ratio < cfg.eta2 {
                    cfg.gamma2 * self.delta
                } else {
                    (2.0 * self.delta).min(self.delta_max)
                };
            }
            record.accepted = accept;
            if accept {
                self.center = sub.psi;
                self.center_sol = sol;
                self.center_grad = grad;
                self.center_in_window = false;
            } else if cfg.add_rejected_snapshots {
                self.window.push(sol.u, sol.lambda);
            }
        }
        record.next_delta = self.delta;
        let counts = self.hdm.stats().counts();
        record.hdm_total = counts.hdm;
        record.rom_total = counts.rom;
        log::debug!(
            "tr iter {}: J = {:.6e}, delta = {:.3e}, ratio = {:?}, accepted = {}",
            record.iteration,
            j_c,
            record.delta,
            record.ratio,
            record.accepted
        );
        self.history.push(record);
        Ok(self.history.last())
    }
}

fn violation(psi: &[f64], c: &VolumeConstraint) -> f64 {
    let bx = psi.iter().map(|&x| (-x).max(x - 1.0)).fold(0.0, f64::max);
    bx.max(c.volume(psi) - c.cap)
}

/// `theta_k` at an arbitrary design for the model built around `center`.
pub fn constraint_value(kind: ConstraintKind, rom: &Rom, psi: &[f64], center: &[f64]) -> Result<f64, Error> {
    let sol = rom.solve(psi)?;
    tr_constraint(kind, rom, psi, center, &sol)
}
