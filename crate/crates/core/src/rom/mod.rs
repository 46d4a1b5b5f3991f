//! Galerkin reduced-order model built on the fly from HDM snapshots:
//! snapshot window, POD, basis construction, reduced solves, full-space
//! residuals and residual-based error bounds.

mod basis;

pub use basis::{
    build_basis, gram_schmidt, pod, truncation_size, ReducedBasis, SnapshotWindow, GS_DROP_TOL,
};

use std::sync::Arc;

use nalgebra::DVector;

use crate::fem::factorize;
use crate::hdm::{design_hash, dot, norm, Hdm};
use crate::Error;

/// Reduced state at one design.
#[derive(Debug, Clone)]
pub struct RomSolution {
    pub generation: u64,
    pub psi_hash: u64,
    pub rho: Vec<f64>,
    pub clamped: Vec<bool>,
    pub coeffs: DVector<f64>,
    pub lambda_coeffs: DVector<f64>,
    /// `Phi coeffs` on the free dofs.
    pub u: Vec<f64>,
    pub lambda: Vec<f64>,
    pub value: f64,
}

/// Which error quantities [`Rom::error_bounds`] computes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BoundMode {
    /// Residual norms only.
    Cheap,
    /// Also estimates `sigma_min(K)` and evaluates the bounds that need it.
    Certified,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ErrorReport {
    pub residual: f64,
    pub adjoint_residual: f64,
    /// `None` in cheap mode or when the power iteration did not converge.
    pub sigma_min: Option<f64>,
    /// `sigma_min^{-1/2} |r|`, bounding the energy-norm state error.
    pub energy_error_bound: Option<f64>,
    /// `sigma_min^{-1} |r|^2`, bounding `|J - J_k|` for compliance.
    pub compliance_error_bound: Option<f64>,
}

/// Reduced-order evaluator sharing the HDM problem data and statistics.
#[derive(Debug, Clone)]
pub struct Rom {
    hdm: Hdm,
    basis: Arc<ReducedBasis>,
}

impl Rom {
    pub fn new(hdm: Hdm, basis: Arc<ReducedBasis>) -> Result<Self, Error> {
        crate::fem::check_len(hdm.problem().n_free(), basis.n_free())?;
        Ok(Self { hdm, basis })
    }

    pub fn basis(&self) -> &Arc<ReducedBasis> {
        &self.basis
    }

    pub fn hdm(&self) -> &Hdm {
        &self.hdm
    }

    fn scales(&self, rho: &[f64]) -> Vec<f64> {
        let m = self.hdm.problem().material;
        rho.iter().map(|&r| m.alpha(r)).collect()
    }

    /// Solves `K_hat(rho) c = f_hat` (and the reduced adjoint when needed).
    pub fn solve(&self, psi: &[f64]) -> Result<RomSolution, Error> {
        let (rho, clamped, _) = self.hdm.densities(psi)?;
        let k_hat = self.basis.reduced_matrix(&self.scales(&rho));
        let chol = k_hat.clone().cholesky().ok_or_else(|| {
            Error::DegenerateBasis(format!("reduced stiffness of size {} is not SPD", self.basis.dim()))
        })?;
        let mut coeffs = chol.solve(self.basis.f_hat());
        // One step of refinement keeps the center state exact to round-off.
        let res = self.basis.f_hat() - &k_hat * &coeffs;
        coeffs += chol.solve(&res);
        self.hdm.stats().add_rom();
        let u = self.basis.reconstruct(&coeffs);
        let f = &self.hdm.problem().load;
        let obj = self.hdm.objective();
        let (lambda_coeffs, lambda) = if obj.is_compliance() {
            (coeffs.clone(), u.clone())
        } else {
            let g = DVector::from_vec(obj.grad_u(&u, &rho, f));
            let g_hat = self.basis.phi().tr_mul(&g);
            let mut l = chol.solve(&g_hat);
            let res = &g_hat - &k_hat * &l;
            l += chol.solve(&res);
            let full = self.basis.reconstruct(&l);
            (l, full)
        };
        let value = obj.value(&u, &rho, f);
        Ok(RomSolution {
            generation: self.basis.generation(),
            psi_hash: design_hash(psi),
            rho,
            clamped,
            coeffs,
            lambda_coeffs,
            u,
            lambda,
            value,
        })
    }

    fn check(&self, sol: &RomSolution) -> Result<(), Error> {
        if sol.generation != self.basis.generation() {
            return Err(Error::BasisMismatch {
                expected: self.basis.generation(),
                found: sol.generation,
            });
        }
        Ok(())
    }

    /// Reduced gradient by the same adjoint formula as the HDM, with the
    /// reduced primal and adjoint states.
    pub fn gradient(&self, psi: &[f64], sol: &RomSolution) -> Result<Vec<f64>, Error> {
        self.check(sol)?;
        if design_hash(psi) != sol.psi_hash {
            return Err(Error::StaleSolution);
        }
        let s = self.hdm.density_sensitivity(&sol.rho, &sol.clamped, &sol.u, &sol.lambda);
        Ok(self.hdm.problem().filter.apply_filter_adjoint(&s)?)
    }

    /// Full-space primal residual `K(rho) Phi c - f`.
    pub fn residual(&self, sol: &RomSolution) -> Result<Vec<f64>, Error> {
        self.check(sol)?;
        Ok(self.basis.residual(
            &self.scales(&sol.rho),
            &sol.coeffs,
            self.hdm.element_dofs(),
            &self.hdm.problem().load,
        ))
    }

    pub fn residual_norm(&self, sol: &RomSolution) -> Result<f64, Error> {
        Ok(norm(&self.residual(sol)?))
    }

    /// Full-space adjoint residual `K(rho) Phi c_lambda - dj/du(u_k)`.
    pub fn adjoint_residual_norm(&self, sol: &RomSolution) -> Result<f64, Error> {
        self.check(sol)?;
        let obj = self.hdm.objective();
        if obj.is_compliance() {
            return self.residual_norm(sol);
        }
        let g = obj.grad_u(&sol.u, &sol.rho, &self.hdm.problem().load);
        let zero = vec![0.0; g.len()];
        let mut r = self.basis.residual(&self.scales(&sol.rho), &sol.lambda_coeffs, self.hdm.element_dofs(), &zero);
        for (ri, gi) in r.iter_mut().zip(&g) {
            *ri -= gi;
        }
        Ok(norm(&r))
    }

    pub fn error_bounds(&self, sol: &RomSolution, mode: BoundMode) -> Result<ErrorReport, Error> {
        let residual = self.residual_norm(sol)?;
        let adjoint_residual = self.adjoint_residual_norm(sol)?;
        let mut report = ErrorReport {
            residual,
            adjoint_residual,
            sigma_min: None,
            energy_error_bound: None,
            compliance_error_bound: None,
        };
        if mode == BoundMode::Certified {
            report.sigma_min = smallest_eigenvalue(&self.hdm, &sol.rho)?;
            if let Some(s) = report.sigma_min {
                report.energy_error_bound = Some(residual / s.sqrt());
                if self.hdm.objective().is_compliance() {
                    report.compliance_error_bound = Some(residual * residual / s);
                }
            }
        }
        Ok(report)
    }
}

/// Smallest eigenvalue of `K(rho)` by inverse power iteration; `None` if the
/// Rayleigh quotient has not settled to `1e-10` after 200 iterations.
pub fn smallest_eigenvalue(hdm: &Hdm, rho: &[f64]) -> Result<Option<f64>, Error> {
    let k = hdm.assemble_stiffness(rho)?;
    let fact = factorize(&k)?;
    hdm.stats().add_certification();
    let n = k.n();
    // Deterministic start vector with components in every direction.
    let mut x: Vec<f64> = (0..n).map(|i| 1.0 + ((i * 7919) % 113) as f64 / 113.0).collect();
    let nx = norm(&x);
    x.iter_mut().for_each(|v| *v /= nx);
    let mut prev = f64::INFINITY;
    for _ in 0..200 {
        let mut y = fact.solve(&x)?;
        let ny = norm(&y);
        y.iter_mut().for_each(|v| *v /= ny);
        let lambda = dot(&y, &k.matvec(&y));
        if (lambda - prev).abs() <= 1e-10 * lambda.abs() {
            return Ok(Some(lambda));
        }
        prev = lambda;
        x = y;
    }
    Ok(None)
}
