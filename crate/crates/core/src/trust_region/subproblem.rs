use crate::hdm::norm;
use crate::mma::{MmaConfig, MmaState, VolumeConstraint};
use crate::rom::{Rom, RomSolution};
use crate::Error;

use super::ConstraintKind;

/// Halvings tried when the very first MMA step leaves the trust region.
const MAX_BACKTRACKS: usize = 40;

/// Outcome of one approximate subproblem solve.
#[derive(Debug, Clone)]
pub struct SubproblemResult {
    pub psi: Vec<f64>,
    pub model_value: f64,
    pub theta: f64,
    pub rom_solves: usize,
    pub inner_steps: usize,
    /// `1 + ` the largest observed gradient-difference quotient of the model.
    pub beta_estimate: f64,
    pub backtracked: bool,
}

impl SubproblemResult {
    pub fn moved(&self, center: &[f64]) -> bool {
        self.psi.as_slice() != center
    }
}

/// `theta_k(psi)` for a reduced solution at `psi`.
pub fn tr_constraint(
    kind: ConstraintKind,
    rom: &Rom,
    psi: &[f64],
    center: &[f64],
    sol: &RomSolution,
) -> Result<f64, Error> {
    match kind {
        ConstraintKind::Residual => rom.residual_norm(sol),
        ConstraintKind::Distance => Ok(distance(psi, center)),
    }
}

fn distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum::<f64>().sqrt()
}

/// Runs MMA on the reduced model over `C` without the trust-region
/// constraint and stops at the first iterate that leaves the region. The
/// returned candidate is the in-region iterate with the lowest model value
/// (the center if none improves on it). When the first step already leaves
/// the region it is shortened toward the center until it fits.
#[allow(clippy::too_many_arguments)]
pub fn solve_subproblem(
    rom: &Rom,
    kind: ConstraintKind,
    center: &[f64],
    center_value: f64,
    center_grad: &[f64],
    delta: f64,
    constraint: &VolumeConstraint,
    max_inner: usize,
    mma: &MmaConfig,
) -> Result<SubproblemResult, Error> {
    let mut out = SubproblemResult {
        psi: center.to_vec(),
        model_value: center_value,
        theta: 0.0,
        rom_solves: 0,
        inner_steps: 0,
        beta_estimate: 1.0,
        backtracked: false,
    };
    let mut state = MmaState::new(center.to_vec(), mma.clone());
    let mut grad = center_grad.to_vec();
    let mut prev = center.to_vec();
    for step in 1..=max_inner {
        let x = state.step(&grad, constraint)?.to_vec();
        out.inner_steps = step;
        let sol = rom.solve(&x)?;
        out.rom_solves += 1;
        let theta = tr_constraint(kind, rom, &x, center, &sol)?;
        if theta > delta {
            if step == 1 {
                backtrack(rom, kind, center, &x, delta, &mut out)?;
            }
            break;
        }
        if sol.value < out.model_value {
            out.psi = x.clone();
            out.model_value = sol.value;
            out.theta = theta;
        }
        let g = rom.gradient(&x, &sol)?;
        let dx = distance(&x, &prev);
        if dx > 0.0 {
            let dg: Vec<f64> = g.iter().zip(&grad).map(|(a, b)| a - b).collect();
            out.beta_estimate = out.beta_estimate.max(1.0 + norm(&dg) / dx);
        }
        prev = x;
        grad = g;
    }
    Ok(out)
}

fn backtrack(
    rom: &Rom,
    kind: ConstraintKind,
    center: &[f64],
    first: &[f64],
    delta: f64,
    out: &mut SubproblemResult,
) -> Result<(), Error> {
    out.backtracked = true;
    let d: Vec<f64> = first.iter().zip(center).map(|(a, b)| a - b).collect();
    let nd = norm(&d);
    if nd == 0.0 {
        return Ok(());
    }
    let point = |t: f64| -> Vec<f64> {
        center
            .iter()
            .zip(&d)
            .map(|(c, di)| (c + t * di).clamp(0.0, 1.0))
            .collect()
    };
    let mut t = match kind {
        ConstraintKind::Distance => (delta / nd) * (1.0 - 1e-12),
        ConstraintKind::Residual => 0.5,
    };
    for _ in 0..MAX_BACKTRACKS {
        let x = point(t);
        let sol = rom.solve(&x)?;
        out.rom_solves += 1;
        let theta = tr_constraint(kind, rom, &x, center, &sol)?;
        if theta <= delta {
            if sol.value < out.model_value {
                out.psi = x;
                out.model_value = sol.value;
                out.theta = theta;
            }
            return Ok(());
        }
        t *= 0.5;
    }
    Ok(())
}
