//! Full-order elasticity model: stiffness assembly, displacement and adjoint
//! solves, objective values and adjoint gradients with respect to the
//! unfiltered design.

use std::collections::hash_map::DefaultHasher;
use std::hash::{Hash, Hasher};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Arc;

use crate::fem::{
    elasticity_element_matrix, factorize, Assembler, DofMap, Matrix8, SparseSpdMatrix,
    StructuredMesh,
};
use crate::filter::{clamp_density, HelmholtzFilter};
use crate::Error;

/// Modified SIMP interpolation `alpha(rho) = rho_l + (1 - rho_l) rho^p`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MaterialModel {
    pub rho_min: f64,
    pub penal: f64,
}

impl Default for MaterialModel {
    fn default() -> Self {
        Self {
            rho_min: 1e-3,
            penal: 3.0,
        }
    }
}

impl MaterialModel {
    pub fn alpha(&self, rho: f64) -> f64 {
        self.rho_min + (1.0 - self.rho_min) * rho.powf(self.penal)
    }

    pub fn alpha_deriv(&self, rho: f64) -> f64 {
        (1.0 - self.rho_min) * self.penal * rho.powf(self.penal - 1.0)
    }
}

/// Objective `j(u, rho)` with analytic partial derivatives. `u` lives on the
/// free dofs and `f` is the (free) load vector.
pub trait Objective: Send + Sync {
    fn value(&self, u: &[f64], rho: &[f64], f: &[f64]) -> f64;
    fn grad_u(&self, u: &[f64], rho: &[f64], f: &[f64]) -> Vec<f64>;
    fn grad_rho(&self, u: &[f64], rho: &[f64], f: &[f64]) -> Vec<f64>;
    /// `j = f^T u`, so the adjoint state equals the primal state.
    fn is_compliance(&self) -> bool {
        false
    }
    fn is_linear_in_u(&self) -> bool {
        false
    }
}

/// Structural compliance `f^T u`.
#[derive(Debug, Clone, Copy, Default)]
pub struct Compliance;

impl Objective for Compliance {
    fn value(&self, u: &[f64], _rho: &[f64], f: &[f64]) -> f64 {
        dot(f, u)
    }

    fn grad_u(&self, _u: &[f64], _rho: &[f64], f: &[f64]) -> Vec<f64> {
        f.to_vec()
    }

    fn grad_rho(&self, _u: &[f64], rho: &[f64], _f: &[f64]) -> Vec<f64> {
        vec![0.0; rho.len()]
    }

    fn is_compliance(&self) -> bool {
        true
    }

    fn is_linear_in_u(&self) -> bool {
        true
    }
}

/// `f^T u + |u|^2 / 2 + sum rho_e^2`; exercises every term of the adjoint
/// gradient.
#[derive(Debug, Clone, Copy, Default)]
pub struct SyntheticObjective;

impl Objective for SyntheticObjective {
    fn value(&self, u: &[f64], rho: &[f64], f: &[f64]) -> f64 {
        dot(f, u) + 0.5 * dot(u, u) + dot(rho, rho)
    }

    fn grad_u(&self, u: &[f64], _rho: &[f64], f: &[f64]) -> Vec<f64> {
        f.iter().zip(u).map(|(a, b)| a + b).collect()
    }

    fn grad_rho(&self, _u: &[f64], rho: &[f64], _f: &[f64]) -> Vec<f64> {
        rho.iter().map(|r| 2.0 * r).collect()
    }
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub(crate) fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

/// Solve counters shared by every evaluator of one run.
#[derive(Debug, Default)]
pub struct SolveStats {
    hdm: AtomicUsize,
    adjoint: AtomicUsize,
    factorizations: AtomicUsize,
    certification: AtomicUsize,
    rom: AtomicUsize,
}

/// Snapshot of [`SolveStats`].
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct SolveCounts {
    pub hdm: usize,
    pub adjoint: usize,
    /// Every factorization of the elasticity matrix, including those used
    /// only to certify error bounds.
    pub factorizations: usize,
    pub certification: usize,
    pub rom: usize,
}

impl SolveStats {
    pub fn counts(&self) -> SolveCounts {
        SolveCounts {
            hdm: self.hdm.load(Ordering::SeqCst),
            adjoint: self.adjoint.load(Ordering::SeqCst),
            factorizations: self.factorizations.load(Ordering::SeqCst),
            certification: self.certification.load(Ordering::SeqCst),
            rom: self.rom.load(Ordering::SeqCst),
        }
    }

    pub(crate) fn add_rom(&self) {
        self.rom.fetch_add(1, Ordering::SeqCst);
    }

    pub(crate) fn add_certification(&self) {
        self.certification.fetch_add(1, Ordering::SeqCst);
        self.factorizations.fetch_add(1, Ordering::SeqCst);
    }
}

/// Hash of the exact bit pattern of a design vector.
pub fn design_hash(psi: &[f64]) -> u64 {
    let mut h = DefaultHasher::new();
    for v in psi {
        v.to_bits().hash(&mut h);
    }
    h.finish()
}

/// Discretized compliance-type problem on a structured mesh.
#[derive(Debug, Clone)]
pub struct ElasticityProblem {
    pub mesh: StructuredMesh,
    pub material: MaterialModel,
    pub youngs_modulus: f64,
    pub poisson_ratio: f64,
    pub dofs: DofMap,
    /// Load on the free dofs.
    pub load: Vec<f64>,
    pub filter: Arc<HelmholtzFilter>,
    /// Volume cap `V` in area units.
    pub volume: f64,
}

impl ElasticityProblem {
    /// Element weights `|Omega_e|` of the linear volume constraint.
    pub fn volume_weights(&self) -> Vec<f64> {
        vec![self.mesh.elem_area(); self.mesh.elem_count()]
    }

    pub fn n_free(&self) -> usize {
        self.dofs.n_free()
    }

    pub fn elem_count(&self) -> usize {
        self.mesh.elem_count()
    }

    /// Free-dof index of each local dof of each element.
    pub fn element_free_dofs(&self) -> Vec<[Option<usize>; 8]> {
        (0..self.mesh.elem_count())
            .map(|e| {
                let full = self.mesh.elem_vector_dofs(e);
                let mut out = [None; 8];
                for (k, d) in full.iter().enumerate() {
                    out[k] = self.dofs.free(*d);
                }
                out
            })
            .collect()
    }
}

/// Result of one full-order solve.
#[derive(Debug, Clone)]
pub struct HdmSolution {
    pub psi_hash: u64,
    pub rho: Vec<f64>,
    /// Elements whose filtered density was clamped into `[rho_l, 1]`.
    pub clamped: Vec<bool>,
    pub clamp_width: f64,
    pub u: Vec<f64>,
    pub lambda: Vec<f64>,
    pub value: f64,
}

/// Full-order evaluator with cached assembly plan and element matrix.
#[derive(Debug, Clone)]
pub struct Hdm {
    problem: Arc<ElasticityProblem>,
    objective: Arc<dyn ObjectiveDebug>,
    ke: Matrix8,
    elem_dofs: Vec<[Option<usize>; 8]>,
    assembler: Assembler,
    stats: Arc<SolveStats>,
}

/// Object-safe helper so `Hdm` can derive `Debug`.
pub trait ObjectiveDebug: Objective + std::fmt::Debug {}
impl<T: Objective + std::fmt::Debug> ObjectiveDebug for T {}

impl Hdm {
    pub fn new<O: Objective + std::fmt::Debug + 'static>(
        problem: Arc<ElasticityProblem>,
        objective: O,
    ) -> Result<Self, Error> {
        Self::with_stats(problem, Arc::new(objective), Arc::new(SolveStats::default()))
    }

    pub fn with_stats(
        problem: Arc<ElasticityProblem>,
        objective: Arc<dyn ObjectiveDebug>,
        stats: Arc<SolveStats>,
    ) -> Result<Self, Error> {
        let ke = elasticity_element_matrix(problem.youngs_modulus, problem.poisson_ratio, problem.mesh.h())?;
        let elem_dofs = problem.element_free_dofs();
        let lists: Vec<Vec<Option<usize>>> = elem_dofs.iter().map(|d| d.to_vec()).collect();
        let assembler = Assembler::new(problem.n_free(), &lists);
        crate::fem::check_len(problem.n_free(), problem.load.len())?;
        Ok(Self {
            problem,
            objective,
            ke,
            elem_dofs,
            assembler,
            stats,
        })
    }

    pub fn problem(&self) -> &Arc<ElasticityProblem> {
        &self.problem
    }

    pub fn objective(&self) -> &dyn ObjectiveDebug {
        self.objective.as_ref()
    }

    pub fn objective_arc(&self) -> Arc<dyn ObjectiveDebug> {
        Arc::clone(&self.objective)
    }

    pub fn stats(&self) -> &Arc<SolveStats> {
        &self.stats
    }

    pub fn element_matrix(&self) -> &Matrix8 {
        &self.ke
    }

    pub fn element_dofs(&self) -> &[[Option<usize>; 8]] {
        &self.elem_dofs
    }

    /// Filtered and clamped densities with the clamp mask.
    pub fn densities(&self, psi: &[f64]) -> Result<(Vec<f64>, Vec<bool>, f64), Error> {
        let raw = self.problem.filter.apply(psi)?;
        let mut rho = raw.clone();
        let width = clamp_density(&mut rho, self.problem.material.rho_min);
        if width > 0.0 {
            log::trace!("clamped filtered density by {width:.3e}");
        }
        let clamped = raw.iter().zip(&rho).map(|(a, b)| a != b).collect();
        Ok((rho, clamped, width))
    }

    pub fn assemble_stiffness(&self, rho: &[f64]) -> Result<SparseSpdMatrix, Error> {
        let scales: Vec<f64> = rho.iter().map(|&r| self.problem.material.alpha(r)).collect();
        Ok(self.assembler.assemble(self.ke.as_slice(), &scales)?)
    }

    /// One HDM evaluation: filter, assemble, factorize, solve the primal
    /// and, unless the objective is compliance, the adjoint system.
    pub fn solve(&self, psi: &[f64]) -> Result<HdmSolution, Error> {
        let (rho, clamped, clamp_width) = self.densities(psi)?;
        let k = self.assemble_stiffness(&rho)?;
        let fact = factorize(&k)?;
        self.stats.factorizations.fetch_add(1, Ordering::SeqCst);
        self.stats.hdm.fetch_add(1, Ordering::SeqCst);
        let f = &self.problem.load;
        let u = fact.solve(f)?;
        let lambda = if self.objective.is_compliance() {
            u.clone()
        } else {
            self.stats.adjoint.fetch_add(1, Ordering::SeqCst);
            fact.solve(&self.objective.grad_u(&u, &rho, f))?
        };
        let value = self.objective.value(&u, &rho, f);
        Ok(HdmSolution {
            psi_hash: design_hash(psi),
            rho,
            clamped,
            clamp_width,
            u,
            lambda,
            value,
        })
    }

    /// Element sensitivities `s_e = dj/drho_e - alpha'(rho_e) u_e^T K_e lambda_e`
    /// for arbitrary states on the free dofs.
    pub fn density_sensitivity(&self, rho: &[f64], clamped: &[bool], u: &[f64], lambda: &[f64]) -> Vec<f64> {
        let djdrho = self.objective.grad_rho(u, rho, &self.problem.load);
        let mut s = vec![0.0; rho.len()];
        for (e, dofs) in self.elem_dofs.iter().enumerate() {
            if clamped[e] {
                continue;
            }
            let mut ue = [0.0; 8];
            let mut le = [0.0; 8];
            for (k, d) in dofs.iter().enumerate() {
                if let Some(d) = d {
                    ue[k] = u[*d];
                    le[k] = lambda[*d];
                }
            }
            let mut q = 0.0;
            for i in 0..8 {
                let mut row = 0.0;
                for j in 0..8 {
                    row += self.ke[(i, j)] * le[j];
                }
                q += ue[i] * row;
            }
            s[e] = djdrho[e] - self.problem.material.alpha_deriv(rho[e]) * q;
        }
        s
    }

    /// Gradient of `J` with respect to `psi`, reusing the states in `solution`.
    pub fn gradient(&self, psi: &[f64], solution: &HdmSolution) -> Result<Vec<f64>, Error> {
        if design_hash(psi) != solution.psi_hash {
            return Err(Error::StaleSolution);
        }
        let s = self.density_sensitivity(&solution.rho, &solution.clamped, &solution.u, &solution.lambda);
        Ok(self.problem.filter.apply_filter_adjoint(&s)?)
    }

    /// Objective value and gradient in one call.
    pub fn evaluate(&self, psi: &[f64]) -> Result<(HdmSolution, Vec<f64>), Error> {
        let sol = self.solve(psi)?;
        let g = self.gradient(psi, &sol)?;
        Ok((sol, g))
    }
}

/// Small cantilever with a unit tip load, for unit tests.
#[cfg(test)]
pub(crate) fn test_cantilever(nx: usize, ny: usize, radius: f64) -> Arc<ElasticityProblem> {
    let mesh = StructuredMesh::new(nx, ny, 1.0).unwrap();
    let fixed: Vec<usize> = mesh
        .edge_nodes(crate::fem::Edge::Left)
        .iter()
        .flat_map(|n| [2 * n, 2 * n + 1])
        .collect();
    let dofs = DofMap::new(2 * mesh.node_count(), fixed);
    let mut full = vec![0.0; 2 * mesh.node_count()];
    full[2 * mesh.node(nx, 0) + 1] = -1.0;
    let load = dofs.restrict(&full);
    let filter = Arc::new(HelmholtzFilter::new(&mesh, radius, crate::filter::DEFAULT_LENGTH_FACTOR).unwrap());
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
