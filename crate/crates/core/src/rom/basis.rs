use std::collections::VecDeque;
use std::sync::atomic::{AtomicU64, Ordering};

use nalgebra::{DMatrix, DVector};

use crate::hdm::Hdm;
use crate::Error;

/// Bounded window of the most recent primal and adjoint HDM snapshots,
/// oldest first.
#[derive(Debug, Clone)]
pub struct SnapshotWindow {
    capacity: usize,
    primal: VecDeque<Vec<f64>>,
    adjoint: VecDeque<Vec<f64>>,
}

impl SnapshotWindow {
    pub fn new(capacity: usize) -> Self {
        assert!(capacity > 0, "window capacity must be positive");
        Self {
            capacity,
            primal: VecDeque::with_capacity(capacity),
            adjoint: VecDeque::with_capacity(capacity),
        }
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    pub fn len(&self) -> usize {
        self.primal.len()
    }

    pub fn is_empty(&self) -> bool {
        self.primal.is_empty()
    }

    pub fn push(&mut self, u: Vec<f64>, lambda: Vec<f64>) {
        if self.primal.len() == self.capacity {
            self.primal.pop_front();
            self.adjoint.pop_front();
        }
        self.primal.push_back(u);
        self.adjoint.push_back(lambda);
    }

    pub fn primal_matrix(&self) -> Option<DMatrix<f64>> {
        columns(&self.primal)
    }

    pub fn adjoint_matrix(&self) -> Option<DMatrix<f64>> {
        columns(&self.adjoint)
    }
}

fn columns(v: &VecDeque<Vec<f64>>) -> Option<DMatrix<f64>> {
    let n = v.front()?.len();
    Some(DMatrix::from_fn(n, v.len(), |i, j| v[j][i]))
}

/// First `n` left singular vectors of `snapshots`, each signed so that its
/// largest-magnitude entry is positive.
pub fn pod(snapshots: &DMatrix<f64>, n: usize) -> Result<DMatrix<f64>, Error> {
    let m = snapshots.ncols();
    if n > m {
        return Err(Error::InvalidInput(format!(
            "cannot extract {n} POD modes from {m} snapshots"
        )));
    }
    if n == 0 {
        return Ok(DMatrix::zeros(snapshots.nrows(), 0));
    }
    // Thin SVD through QR: S = Q R, R = U_r Sigma V^T, so S = (Q U_r) Sigma V^T.
    let qr = snapshots.clone().qr();
    let q = qr.q();
    let r = qr.r();
    let svd = r.svd(true, false);
    let ur = svd.u.expect("left singular vectors requested");
    let mut order: Vec<usize> = (0..svd.singular_values.len()).collect();
    order.sort_by(|&a, &b| svd.singular_values[b].total_cmp(&svd.singular_values[a]));
    let mut out = DMatrix::zeros(snapshots.nrows(), n);
    for (k, &c) in order.iter().take(n).enumerate() {
        let mut v = &q * ur.column(c);
        let imax = v.iamax();
        if v[imax] < 0.0 {
            v.neg_mut();
        }
        out.set_column(k, &v);
    }
    Ok(out)
}

/// Modified Gram-Schmidt with one reorthogonalization pass. A vector whose
/// norm after projection falls below `drop_tol` times its original norm is
/// dropped. Returns the orthonormal columns and the number of drops.
pub fn gram_schmidt(vectors: &[DVector<f64>], drop_tol: f64) -> (Vec<DVector<f64>>, usize) {
    let mut basis: Vec<DVector<f64>> = Vec::with_capacity(vectors.len());
    let mut dropped = 0;
    for v in vectors {
        let orig = v.norm();
        if orig == 0.0 {
            dropped += 1;
            continue;
        }
        let mut w = v.clone();
        for _ in 0..2 {
            for b in &basis {
                let c = b.dot(&w);
                w.axpy(-c, b, 1.0);
            }
        }
        let nw = w.norm();
        if nw < drop_tol * orig {
            dropped += 1;
            continue;
        }
        basis.push(w / nw);
    }
    (basis, dropped)
}

/// Relative tolerance below which Gram-Schmidt discards a vector.
pub const GS_DROP_TOL: f64 = 1e-10;

static GENERATION: AtomicU64 = AtomicU64::new(1);

/// Orthonormal reduced basis with the element-level quantities needed for
/// fast reduced assembly and full-space residuals.
#[derive(Debug, Clone)]
pub struct ReducedBasis {
    generation: u64,
    n_free: usize,
    dim: usize,
    /// Column-major `n_free x dim`.
    phi: DMatrix<f64>,
    /// Per element, `A_e = K_e (P_e^T Phi)` as 8 rows of `dim` (row-major).
    a_e: Vec<f64>,
    /// Per element, the packed upper triangle of `(P_e^T Phi)^T K_e (P_e^T Phi)`.
    gram: Vec<f64>,
    f_hat: DVector<f64>,
    dropped: usize,
}

impl ReducedBasis {
    /// Builds the element data for orthonormal columns `phi`.
    pub fn from_orthonormal(hdm: &Hdm, phi: DMatrix<f64>, dropped: usize) -> Result<Self, Error> {
        let n_free = hdm.problem().n_free();
        crate::fem::check_len(n_free, phi.nrows())?;
        let dim = phi.ncols();
        if dim == 0 {
            return Err(Error::DegenerateBasis("empty basis".into()));
        }
        let ke = hdm.element_matrix();
        let dofs = hdm.element_dofs();
        let packed = dim * (dim + 1) / 2;
        let mut a_e = vec![0.0; dofs.len() * 8 * dim];
        let mut gram = vec![0.0; dofs.len() * packed];
        let mut pe = vec![0.0; 8 * dim];
        for (e, d) in dofs.iter().enumerate() {
            for (k, dof) in d.iter().enumerate() {
                for c in 0..dim {
                    pe[k * dim + c] = dof.map_or(0.0, |i| phi[(i, c)]);
                }
            }
            let ae = &mut a_e[e * 8 * dim..(e + 1) * 8 * dim];
            for i in 0..8 {
                for j in 0..8 {
                    let kij = ke[(i, j)];
                    if kij == 0.0 {
                        continue;
                    }
                    for c in 0..dim {
                        ae[i * dim + c] += kij * pe[j * dim + c];
                    }
                }
            }
            let ge = &mut gram[e * packed..(e + 1) * packed];
            let mut idx = 0;
            for a in 0..dim {
                for b in a..dim {
                    let mut s = 0.0;
                    for i in 0..8 {
                        s += pe[i * dim + a] * ae[i * dim + b];
                    }
                    ge[idx] = s;
                    idx += 1;
                }
            }
        }
        let f = DVector::from_column_slice(&hdm.problem().load);
        let f_hat = phi.tr_mul(&f);
        Ok(Self {
            generation: GENERATION.fetch_add(1, Ordering::Relaxed),
            n_free,
            dim,
            phi,
            a_e,
            gram,
            f_hat,
            dropped,
        })
    }

    pub fn generation(&self) -> u64 {
        self.generation
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn n_free(&self) -> usize {
        self.n_free
    }

    pub fn phi(&self) -> &DMatrix<f64> {
        &self.phi
    }

    pub fn f_hat(&self) -> &DVector<f64> {
        &self.f_hat
    }

    /// Vectors discarded by Gram-Schmidt while building the basis.
    pub fn dropped(&self) -> usize {
        self.dropped
    }

    /// `sum_e scale_e G_e`, the reduced stiffness for element scales.
    pub fn reduced_matrix(&self, scales: &[f64]) -> DMatrix<f64> {
        let dim = self.dim;
        let packed = dim * (dim + 1) / 2;
        let mut acc = vec![0.0; packed];
        for (e, &s) in scales.iter().enumerate() {
            let ge = &self.gram[e * packed..(e + 1) * packed];
            for (a, g) in acc.iter_mut().zip(ge) {
                *a += s * g;
            }
        }
        let mut k = DMatrix::zeros(dim, dim);
        let mut idx = 0;
        for a in 0..dim {
            for b in a..dim {
                k[(a, b)] = acc[idx];
                k[(b, a)] = acc[idx];
                idx += 1;
            }
        }
        k
    }

    /// `sum_e P_e [scale_e A_e c] - f` on the free dofs.
    pub fn residual(&self, scales: &[f64], coeffs: &DVector<f64>, dofs: &[[Option<usize>; 8]], load: &[f64]) -> Vec<f64> {
        let dim = self.dim;
        let mut r: Vec<f64> = load.iter().map(|f| -f).collect();
        for (e, d) in dofs.iter().enumerate() {
            let ae = &self.a_e[e * 8 * dim..(e + 1) * 8 * dim];
            for (i, dof) in d.iter().enumerate() {
                if let Some(g) = dof {
                    let row = &ae[i * dim..(i + 1) * dim];
                    let v: f64 = row.iter().zip(coeffs.iter()).map(|(a, c)| a * c).sum();
                    r[*g] += scales[e] * v;
                }
            }
        }
        r
    }

    /// `Phi c`.
    pub fn reconstruct(&self, coeffs: &DVector<f64>) -> Vec<f64> {
        (&self.phi * coeffs).as_slice().to_vec()
    }
}

/// Truncation size `n_k = min(k - 1, n_max)` clipped to `[0, available]`.
pub fn truncation_size(k: usize, nmax: usize, available: usize) -> usize {
    k.saturating_sub(1).min(nmax).min(available)
}

/// `GramSchmidt([POD_n(U), POD_n(Lambda), u_c, lambda_c])`, or
/// `GramSchmidt([POD_n(U), u_c])` for compliance.
pub fn build_basis(
    hdm: &Hdm,
    window: &SnapshotWindow,
    n: usize,
    center_u: &[f64],
    center_lambda: &[f64],
) -> Result<ReducedBasis, Error> {
    if center_u.is_empty() || center_u.iter().all(|v| *v == 0.0) {
        return Err(Error::InvalidInput("center state is empty".into()));
    }
    let compliance = hdm.objective().is_compliance();
    let n = n.min(window.len());
    let mut cols: Vec<DVector<f64>> = Vec::new();
    if n > 0 {
        let up = pod(&window.primal_matrix().expect("window is non-empty"), n)?;
        cols.extend(up.column_iter().map(|c| c.into_owned()));
        if !compliance {
            let lp = pod(&window.adjoint_matrix().expect("window is non-empty"), n)?;
            cols.extend(lp.column_iter().map(|c| c.into_owned()));
        }
    }
    cols.push(DVector::from_column_slice(center_u));
    if !compliance {
        cols.push(DVector::from_column_slice(center_lambda));
    }
    let (basis, dropped) = gram_schmidt(&cols, GS_DROP_TOL);
    if dropped > 0 {
        log::debug!("Gram-Schmidt dropped {dropped} of {} basis vectors", cols.len());
    }
    let phi = DMatrix::from_columns(&basis);
    ReducedBasis::from_orthonormal(hdm, phi, dropped)
}
