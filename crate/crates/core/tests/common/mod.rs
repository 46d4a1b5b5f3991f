//! Dense brute-force oracles and small problem builders shared by the
//! integration tests. Element matrices are rebuilt here by Gauss quadrature
//! so the oracles do not reuse the library's closed forms.

#![allow(dead_code)]

pub mod bounds;

use std::sync::Arc;

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use romtop::fem::{DofMap, Edge, StructuredMesh};
use romtop::filter::{HelmholtzFilter, DEFAULT_LENGTH_FACTOR};
use romtop::hdm::{ElasticityProblem, MaterialModel};

const GP: [f64; 2] = [-0.577_350_269_189_625_8, 0.577_350_269_189_625_8];
const CORNERS: [(f64, f64); 4] = [(-1.0, -1.0), (1.0, -1.0), (1.0, 1.0), (-1.0, 1.0)];

fn shape(xi: f64, eta: f64) -> [f64; 4] {
    let mut n = [0.0; 4];
    for (k, &(a, b)) in CORNERS.iter().enumerate() {
        n[k] = 0.25 * (1.0 + a * xi) * (1.0 + b * eta);
    }
    n
}

fn shape_grads(xi: f64, eta: f64, h: f64) -> [(f64, f64); 4] {
    let mut g = [(0.0, 0.0); 4];
    for (k, &(a, b)) in CORNERS.iter().enumerate() {
        g[k] = (0.5 * a * (1.0 + b * eta) / h, 0.5 * b * (1.0 + a * xi) / h);
    }
    g
}

/// Plane-stress Q1 stiffness by 2x2 Gauss quadrature.
pub fn quadrature_stiffness(e0: f64, nu: f64, h: f64) -> DMatrix<f64> {
    let c = e0 / (1.0 - nu * nu);
    let d = DMatrix::from_row_slice(3, 3, &[c, c * nu, 0.0, c * nu, c, 0.0, 0.0, 0.0, c * (1.0 - nu) / 2.0]);
    let mut k = DMatrix::zeros(8, 8);
    let jac = h * h / 4.0;
    for &xi in &GP {
        for &eta in &GP {
            let g = shape_grads(xi, eta, h);
            let mut b = DMatrix::zeros(3, 8);
            for (n, &(dx, dy)) in g.iter().enumerate() {
                b[(0, 2 * n)] = dx;
                b[(1, 2 * n + 1)] = dy;
                b[(2, 2 * n)] = dy;
                b[(2, 2 * n + 1)] = dx;
            }
            k += b.transpose() * &d * b * jac;
        }
    }
    k
}

/// Helmholtz element matrix `r^2 S + M` and `M 1` by quadrature.
pub fn quadrature_helmholtz(r: f64, h: f64) -> (DMatrix<f64>, DVector<f64>) {
    let mut a = DMatrix::zeros(4, 4);
    let mut m = DMatrix::zeros(4, 4);
    let jac = h * h / 4.0;
    for &xi in &GP {
        for &eta in &GP {
            let n = shape(xi, eta);
            let g = shape_grads(xi, eta, h);
            for i in 0..4 {
                for j in 0..4 {
                    m[(i, j)] += n[i] * n[j] * jac;
                    a[(i, j)] += r * r * (g[i].0 * g[j].0 + g[i].1 * g[j].1) * jac;
                }
            }
        }
    }
    let b = &m * DVector::repeat(4, 1.0);
    (a + m, b)
}

/// Dense re-implementation of the full-order model on a problem.
pub struct DenseOracle {
    pub nx: usize,
    pub ny: usize,
    pub ke: DMatrix<f64>,
    pub material: MaterialModel,
    /// Full dof index of each free dof.
    pub free: Vec<usize>,
    pub load: DVector<f64>,
    /// Filter matrix `d rho / d psi` (before clamping).
    pub filter: DMatrix<f64>,
    pub helmholtz: DMatrix<f64>,
}

fn elem_nodes(nx: usize, i: usize, j: usize) -> [usize; 4] {
    let n0 = j * (nx + 1) + i;
    let n3 = (j + 1) * (nx + 1) + i;
    [n0, n0 + 1, n3 + 1, n3]
}

impl DenseOracle {
    pub fn new(p: &ElasticityProblem) -> Self {
        let (nx, ny, h) = (p.mesh.nx(), p.mesh.ny(), p.mesh.h());
        let nv = (nx + 1) * (ny + 1);
        let ne = nx * ny;
        let (he, be) = quadrature_helmholtz(p.filter.length(), h);
        let mut hm = DMatrix::zeros(nv, nv);
        let mut bm = DMatrix::zeros(nv, ne);
        let mut am = DMatrix::zeros(ne, nv);
        for j in 0..ny {
            for i in 0..nx {
                let e = j * nx + i;
                let nodes = elem_nodes(nx, i, j);
                for a in 0..4 {
                    bm[(nodes[a], e)] += be[a];
                    am[(e, nodes[a])] = 0.25;
                    for b in 0..4 {
                        hm[(nodes[a], nodes[b])] += he[(a, b)];
                    }
                }
            }
        }
        let filter = &am * hm.clone().lu().solve(&bm).expect("Helmholtz matrix is invertible");
        let free: Vec<usize> = (0..p.dofs.n_free()).map(|i| p.dofs.full(i)).collect();
        Self {
            nx,
            ny,
            ke: quadrature_stiffness(p.youngs_modulus, p.poisson_ratio, h),
            material: p.material,
            free,
            load: DVector::from_column_slice(&p.load),
            filter,
            helmholtz: hm,
        }
    }

    pub fn n_elem(&self) -> usize {
        self.nx * self.ny
    }

    /// Filtered densities clamped into `[rho_l, 1]`, with the clamp mask.
    pub fn densities(&self, psi: &[f64]) -> (Vec<f64>, Vec<bool>) {
        let raw = &self.filter * DVector::from_column_slice(psi);
        let lo = self.material.rho_min;
        let rho: Vec<f64> = raw.iter().map(|r| r.clamp(lo, 1.0)).collect();
        let mask = raw.iter().zip(&rho).map(|(a, b)| a != b).collect();
        (rho, mask)
    }

    fn elem_free_dofs(&self, e: usize) -> [Option<usize>; 8] {
        let (i, j) = (e % self.nx, e / self.nx);
        let nodes = elem_nodes(self.nx, i, j);
        let mut out = [None; 8];
        for (k, n) in nodes.iter().enumerate() {
            for c in 0..2 {
                out[2 * k + c] = self.free.iter().position(|&f| f == 2 * n + c);
            }
        }
        out
    }

    /// `K_q` embedded in the free-dof space, unit density.
    pub fn element_stiffness(&self, e: usize) -> DMatrix<f64> {
        let n = self.free.len();
        let mut k = DMatrix::zeros(n, n);
        let d = self.elem_free_dofs(e);
        for a in 0..8 {
            for b in 0..8 {
                if let (Some(i), Some(j)) = (d[a], d[b]) {
                    k[(i, j)] += self.ke[(a, b)];
                }
            }
        }
        k
    }

    pub fn stiffness(&self, rho: &[f64]) -> DMatrix<f64> {
        let n = self.free.len();
        let mut k = DMatrix::zeros(n, n);
        for (e, &r) in rho.iter().enumerate() {
            k += self.element_stiffness(e) * self.material.alpha(r);
        }
        k
    }

    pub fn solve(&self, rho: &[f64]) -> DVector<f64> {
        self.stiffness(rho).cholesky().expect("SPD stiffness").solve(&self.load)
    }

    /// `(J, grad J)` for compliance (`synthetic = false`) or the synthetic
    /// objective `f^T u + |u|^2/2 + |rho|^2`.
    pub fn value_and_gradient(&self, psi: &[f64], synthetic: bool) -> (f64, DVector<f64>) {
        let (rho, mask) = self.densities(psi);
        let k = self.stiffness(&rho);
        let chol = k.clone().cholesky().expect("SPD stiffness");
        let u = chol.solve(&self.load);
        let (value, lambda) = if synthetic {
            let rho_sq: f64 = rho.iter().map(|r| r * r).sum();
            (self.load.dot(&u) + 0.5 * u.dot(&u) + rho_sq, chol.solve(&(&self.load + &u)))
        } else {
            (self.load.dot(&u), u.clone())
        };
        let mut s = DVector::zeros(rho.len());
        for e in 0..rho.len() {
            if mask[e] {
                continue;
            }
            let ke = self.element_stiffness(e);
            let djdrho = if synthetic { 2.0 * rho[e] } else { 0.0 };
            s[e] = djdrho - self.material.alpha_deriv(rho[e]) * u.dot(&(ke * &lambda));
        }
        (value, self.filter.transpose() * s)
    }

    /// Galerkin solution for basis `phi`.
    pub fn rom_solve(&self, rho: &[f64], phi: &DMatrix<f64>) -> DVector<f64> {
        let k = self.stiffness(rho);
        let kr = phi.transpose() * &k * phi;
        let c = kr.cholesky().expect("SPD reduced stiffness").solve(&(phi.transpose() * &self.load));
        phi * c
    }
}

pub fn energy_norm(k: &DMatrix<f64>, v: &DVector<f64>) -> f64 {
    v.dot(&(k * v)).sqrt()
}

pub fn sym_eigenvalues(a: &DMatrix<f64>) -> DVector<f64> {
    SymmetricEigen::new(a.clone()).eigenvalues
}

pub fn sigma_max(a: &DMatrix<f64>) -> f64 {
    a.clone().svd(false, false).singular_values.max()
}

/// Cantilever clamped on the left with a unit downward tip load at the
/// bottom-right corner.
pub fn cantilever(nx: usize, ny: usize, radius: f64) -> Arc<ElasticityProblem> {
    let mesh = StructuredMesh::new(nx, ny, 1.0).unwrap();
    let fixed: Vec<usize> = mesh
        .edge_nodes(Edge::Left)
        .iter()
        .flat_map(|n| [2 * n, 2 * n + 1])
        .collect();
    let dofs = DofMap::new(2 * mesh.node_count(), fixed);
    let mut full = vec![0.0; 2 * mesh.node_count()];
    full[2 * mesh.node(nx, 0) + 1] = -1.0;
    full[2 * mesh.node(nx, ny)] = 0.3;
    let load = dofs.restrict(&full);
    let filter = Arc::new(HelmholtzFilter::new(&mesh, radius, DEFAULT_LENGTH_FACTOR).unwrap());
    let volume = 0.5 * mesh.area();
    Arc::new(ElasticityProblem {
        mesh,
        material: MaterialModel::default(),
        youngs_modulus: 1.0,
        poisson_ratio: 0.3,
        dofs,
        load,
        filter,
        volume,
    })
}

pub fn rel_err(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs().max(1e-300)
}

pub fn rel_err_vec(a: &[f64], b: &[f64]) -> f64 {
    let num: f64 = a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum::<f64>().sqrt();
    let den: f64 = b.iter().map(|y| y * y).sum::<f64>().sqrt();
    num / den.max(1e-300)
}
