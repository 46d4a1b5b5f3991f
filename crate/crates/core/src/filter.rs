//! Helmholtz density filter projected onto element-wise constants.
//!
//! The nodal field `phi` solves `H phi = b(psi)` with `H = sum_e Q_e H_e Q_e^T`
//! (pure Neumann, SPD thanks to the mass term) and `b(psi) = sum_e psi_e Q_e b_e`.
//! Element densities are nodal averages of `phi`.

use crate::fem::{
    factorize, helmholtz_element_matrices, Assembler, FemError, SpdFactorization, StructuredMesh,
    Vector4,
};

/// `r = R / (2 sqrt(3))`, the default relation between the characteristic
/// radius `R` and the Helmholtz length `r`.
pub const DEFAULT_LENGTH_FACTOR: f64 = 0.288_675_134_594_812_9;

#[derive(Debug, Clone)]
pub struct HelmholtzFilter {
    elem_nodes: Vec<[usize; 4]>,
    n_nodes: usize,
    be: Vector4,
    radius: f64,
    length: f64,
    factor: SpdFactorization,
}

impl HelmholtzFilter {
    /// Filter with characteristic radius `radius` and Helmholtz length
    /// `r = length_factor * radius`.
    pub fn new(mesh: &StructuredMesh, radius: f64, length_factor: f64) -> Result<Self, FemError> {
        if !(radius >= 0.0) || !(length_factor > 0.0) {
            return Err(FemError::InvalidMaterial(format!(
                "filter radius {radius} and length factor {length_factor} must be non-negative"
            )));
        }
        let length = radius * length_factor;
        let (he, be) = helmholtz_element_matrices(length, mesh.h())?;
        let elem_nodes: Vec<[usize; 4]> = (0..mesh.elem_count()).map(|e| mesh.elem_nodes(e)).collect();
        let dofs: Vec<Vec<Option<usize>>> = elem_nodes
            .iter()
            .map(|n| n.iter().map(|&v| Some(v)).collect())
            .collect();
        let asm = Assembler::new(mesh.node_count(), &dofs);
        let h = asm.assemble(he.as_slice(), &vec![1.0; mesh.elem_count()])?;
        let factor = factorize(&h)?;
        Ok(Self {
            elem_nodes,
            n_nodes: mesh.node_count(),
            be,
            radius,
            length,
            factor,
        })
    }

    pub fn radius(&self) -> f64 {
        self.radius
    }

    /// Helmholtz length `r`.
    pub fn length(&self) -> f64 {
        self.length
    }

    pub fn elem_count(&self) -> usize {
        self.elem_nodes.len()
    }

    pub fn node_count(&self) -> usize {
        self.n_nodes
    }

    /// Returns the nodal field `phi` and the element densities `rho`.
    pub fn filter(&self, psi: &[f64]) -> Result<(Vec<f64>, Vec<f64>), FemError> {
        crate::fem::check_len(self.elem_count(), psi.len())?;
        let mut b = vec![0.0; self.n_nodes];
        for (nodes, &p) in self.elem_nodes.iter().zip(psi) {
            for (k, &n) in nodes.iter().enumerate() {
                b[n] += p * self.be[k];
            }
        }
        self.factor.solve_in_place(&mut b)?;
        let rho = self.average(&b);
        Ok((b, rho))
    }

    /// Element densities only.
    pub fn apply(&self, psi: &[f64]) -> Result<Vec<f64>, FemError> {
        Ok(self.filter(psi)?.1)
    }

    /// `(d rho / d psi)^T v`.
    pub fn apply_filter_adjoint(&self, v: &[f64]) -> Result<Vec<f64>, FemError> {
        crate::fem::check_len(self.elem_count(), v.len())?;
        let mut mu = vec![0.0; self.n_nodes];
        for (nodes, &ve) in self.elem_nodes.iter().zip(v) {
            for &n in nodes {
                mu[n] += 0.25 * ve;
            }
        }
        self.factor.solve_in_place(&mut mu)?;
        Ok(self
            .elem_nodes
            .iter()
            .map(|nodes| nodes.iter().enumerate().map(|(k, &n)| self.be[k] * mu[n]).sum())
            .collect())
    }

    fn average(&self, phi: &[f64]) -> Vec<f64> {
        self.elem_nodes
            .iter()
            .map(|nodes| 0.25 * nodes.iter().map(|&n| phi[n]).sum::<f64>())
            .collect()
    }
}

/// Clamps filtered densities into `[lower, 1]` and returns the largest
/// violation that was removed.
pub fn clamp_density(rho: &mut [f64], lower: f64) -> f64 {
    let mut width: f64 = 0.0;
    for r in rho.iter_mut() {
        let c = r.clamp(lower, 1.0);
        width = width.max((c - *r).abs());
        *r = c;
    }
    width
}
