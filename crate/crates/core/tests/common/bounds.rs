//! Dense evaluation of the residual-based ROM error bounds. The operators
//! `A`, `B`, `C`, `D` are formed explicitly from `K^{-1}`, the filter
//! Jacobian and the per-element stiffness matrices.

#![allow(clippy::needless_range_loop)]

use std::sync::Arc;

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use romtop::hdm::{Compliance, ElasticityProblem, Hdm, SyntheticObjective};
use romtop::rom::{ReducedBasis, Rom};

use super::{energy_norm, sigma_max, DenseOracle};

/// One inequality `actual <= bound`.
#[derive(Debug, Clone)]
pub struct BoundCheck {
    pub name: &'static str,
    pub actual: f64,
    pub bound: f64,
}

impl BoundCheck {
    pub fn holds(&self) -> bool {
        self.actual <= self.bound
    }
}

/// Evaluates every bound for the Galerkin ROM with basis `phi` at `psi`.
/// `psi` must not trigger the density clamp.
pub fn error_bound_checks(p: &Arc<ElasticityProblem>, psi: &[f64], phi: &DMatrix<f64>, synthetic: bool) -> Vec<BoundCheck> {
    let oracle = DenseOracle::new(p);
    let (rho, mask) = oracle.densities(psi);
    assert!(mask.iter().all(|m| !m), "design triggers the density clamp");
    let hdm = if synthetic {
        Hdm::new(p.clone(), SyntheticObjective).unwrap()
    } else {
        Hdm::new(p.clone(), Compliance).unwrap()
    };
    let rom = Rom::new(hdm.clone(), Arc::new(ReducedBasis::from_orthonormal(&hdm, phi.clone(), 0).unwrap())).unwrap();
    let sol = rom.solve(psi).unwrap();
    let grad_k = DVector::from_vec(rom.gradient(psi, &sol).unwrap());

    let n = oracle.free.len();
    let ne = oracle.n_elem();
    let k = oracle.stiffness(&rho);
    let k_inv = k.clone().try_inverse().unwrap();
    let eig = SymmetricEigen::new(k.clone());
    let sigma_min = eig.eigenvalues.min();
    let k_inv_sqrt = &eig.eigenvectors
        * DMatrix::from_diagonal(&eig.eigenvalues.map(|l| 1.0 / l.sqrt()))
        * eig.eigenvectors.transpose();
    let hess = if synthetic { DMatrix::identity(n, n) } else { DMatrix::zeros(n, n) };

    let f = &oracle.load;
    let u = &k_inv * f;
    let u_k = DVector::from_column_slice(&sol.u);
    let lam_k = DVector::from_column_slice(&sol.lambda);
    let lam = if synthetic { &k_inv * (f + &u) } else { u.clone() };
    let r = &k * &u_k - f;
    let r_adj = &k * &lam_k - if synthetic { f + &u_k } else { f.clone() };
    let (value, grad) = oracle.value_and_gradient(psi, synthetic);

    // R[q, i] = alpha'_q (K_q u*)_i and L[q, s] = alpha'_q (K_q lambda_k)_s.
    let mut rmat = DMatrix::zeros(ne, n);
    let mut lmat = DMatrix::zeros(ne, n);
    for q in 0..ne {
        let kq = oracle.element_stiffness(q) * oracle.material.alpha_deriv(rho[q]);
        rmat.set_row(q, &(&kq * &u).transpose());
        lmat.set_row(q, &(&kq * &lam_k).transpose());
    }
    let ft = oracle.filter.transpose();
    let c = &ft * (&lmat + &rmat * &k_inv * &hess) * &k_inv;
    let d = &ft * &rmat * &k_inv;
    let a = &k_inv_sqrt * &hess * &k_inv;
    let b = &k_inv * (&hess * 0.5) * &k_inv;
    let (rn, ran) = (r.norm(), r_adj.norm());

    let mut out = vec![
        BoundCheck {
            name: "primal energy error",
            actual: energy_norm(&k, &(&u - &u_k)),
            bound: rn / sigma_min.sqrt(),
        },
        BoundCheck {
            name: "adjoint energy error",
            actual: energy_norm(&k, &(&lam - &lam_k)),
            bound: ran / sigma_min.sqrt() + sigma_max(&a) * rn,
        },
        BoundCheck {
            name: "output error",
            actual: (value - sol.value).abs(),
            bound: rn * ran / sigma_min + sigma_max(&b) * rn * rn,
        },
        BoundCheck {
            name: "gradient error",
            actual: (&grad - &grad_k).norm(),
            bound: sigma_max(&c) * rn + sigma_max(&d) * ran,
        },
        BoundCheck {
            name: "output error without adjoint residual",
            actual: (value - sol.value).abs(),
            bound: lam.norm() * rn + sigma_max(&b) * rn * rn,
        },
    ];
    if !synthetic {
        out.push(BoundCheck {
            name: "compliance output error",
            actual: (value - sol.value).abs(),
            bound: rn * rn / sigma_min,
        });
    }
    out
}
