//! Method of moving asymptotes for `min F(x)` over `[0, 1]^n` intersected
//! with one linear constraint `w^T x <= V`.
//!
//! Each step builds the separable convex approximation of the original MMA
//! (one reciprocal term per variable, chosen by the sign of the gradient)
//! and keeps the linear constraint exact. Given the constraint multiplier
//! every variable has a closed-form minimizer, so the subproblem reduces to
//! a monotone one-dimensional root find.

use crate::hdm::{dot, Hdm};
use crate::Error;

#[derive(Debug, Clone, PartialEq)]
pub struct MmaConfig {
    pub asymptote_init: f64,
    pub asymptote_expand: f64,
    pub asymptote_contract: f64,
    pub asymptote_min: f64,
    pub asymptote_max: f64,
    pub move_limit: f64,
}

impl Default for MmaConfig {
    fn default() -> Self {
        Self {
            asymptote_init: 0.5,
            asymptote_expand: 1.2,
            asymptote_contract: 0.7,
            asymptote_min: 0.01,
            asymptote_max: 10.0,
            move_limit: 0.2,
        }
    }
}

/// `w^T x <= cap`, with positive weights.
#[derive(Debug, Clone, PartialEq)]
pub struct VolumeConstraint {
    pub weights: Vec<f64>,
    pub cap: f64,
}

impl VolumeConstraint {
    pub fn new(weights: Vec<f64>, cap: f64) -> Result<Self, Error> {
        if weights.iter().any(|w| !(*w > 0.0)) {
            return Err(Error::InvalidInput("volume weights must be positive".into()));
        }
        if !(cap >= 0.0) {
            return Err(Error::InvalidInput(format!("volume cap must be >= 0, got {cap}")));
        }
        Ok(Self { weights, cap })
    }

    pub fn volume(&self, x: &[f64]) -> f64 {
        dot(&self.weights, x)
    }

    pub fn is_feasible(&self, x: &[f64], tol: f64) -> bool {
        x.iter().all(|v| (0.0..=1.0).contains(v)) && self.volume(x) <= self.cap + tol
    }
}

const X_MIN: f64 = 0.0;
const X_MAX: f64 = 1.0;

#[derive(Debug, Clone)]
pub struct MmaState {
    config: MmaConfig,
    x: Vec<f64>,
    x1: Vec<f64>,
    x2: Vec<f64>,
    low: Vec<f64>,
    upp: Vec<f64>,
    iter: usize,
    last_multiplier: f64,
}

impl MmaState {
    pub fn new(x0: Vec<f64>, config: MmaConfig) -> Self {
        let n = x0.len();
        Self {
            config,
            x1: x0.clone(),
            x2: x0.clone(),
            x: x0,
            low: vec![X_MIN; n],
            upp: vec![X_MAX; n],
            iter: 0,
            last_multiplier: 0.0,
        }
    }

    pub fn x(&self) -> &[f64] {
        &self.x
    }

    pub fn iteration(&self) -> usize {
        self.iter
    }

    pub fn asymptotes(&self) -> (&[f64], &[f64]) {
        (&self.low, &self.upp)
    }

    /// Volume multiplier found by the last step.
    pub fn multiplier(&self) -> f64 {
        self.last_multiplier
    }

    fn update_asymptotes(&mut self) {
        let c = &self.config;
        let range = X_MAX - X_MIN;
        for j in 0..self.x.len() {
            let x = self.x[j];
            if self.iter < 2 {
                self.low[j] = x - c.asymptote_init * range;
                self.upp[j] = x + c.asymptote_init * range;
            } else {
                let trend = (x - self.x1[j]) * (self.x1[j] - self.x2[j]);
                let gamma = if trend < 0.0 {
                    c.asymptote_contract
                } else if trend > 0.0 {
                    c.asymptote_expand
                } else {
                    1.0
                };
                self.low[j] = x - gamma * (self.x1[j] - self.low[j]);
                self.upp[j] = x + gamma * (self.upp[j] - self.x1[j]);
            }
            self.low[j] = self.low[j]
                .clamp(x - c.asymptote_max * range, x - c.asymptote_min * range);
            self.upp[j] = self
                .upp[j]
                .clamp(x + c.asymptote_min * range, x + c.asymptote_max * range);
        }
    }

    /// One MMA step from the current iterate with objective gradient `grad`.
    /// Returns the new iterate.
    pub fn step(&mut self, grad: &[f64], constraint: &VolumeConstraint) -> Result<&[f64], Error> {
        let n = self.x.len();
        crate::fem::check_len(n, grad.len())?;
        crate::fem::check_len(n, constraint.weights.len())?;
        if grad.iter().any(|g| !g.is_finite()) {
            return Err(Error::InvalidInput("non-finite gradient".into()));
        }
        if !constraint.is_feasible(&self.x, 1e-9 * constraint.cap.max(1.0)) {
            return Err(Error::InvalidInput("MMA iterate is infeasible".into()));
        }
        self.update_asymptotes();
        let range = X_MAX - X_MIN;
        let mut lo = vec![0.0; n];
        let mut hi = vec![0.0; n];
        let mut q = vec![0.0; n];
        for j in 0..n {
            let x = self.x[j];
            lo[j] = X_MIN
                .max(self.low[j] + 0.1 * (x - self.low[j]))
                .max(x - self.config.move_limit * range);
            hi[j] = X_MAX
                .min(self.upp[j] - 0.1 * (self.upp[j] - x))
                .min(x + self.config.move_limit * range);
            q[j] = (x - self.low[j]).powi(2) * (-grad[j]).max(0.0);
        }
        let sub = Subproblem {
            x: &self.x,
            grad,
            low: &self.low,
            q: &q,
            lo: &lo,
            hi: &hi,
            w: &constraint.weights,
        };
        let lambda = sub.multiplier(constraint.cap);
        let next = sub.minimizer(lambda);
        self.last_multiplier = lambda;
        self.x2 = std::mem::replace(&mut self.x1, std::mem::replace(&mut self.x, next));
        self.iter += 1;
        Ok(&self.x)
    }
}

struct Subproblem<'a> {
    x: &'a [f64],
    grad: &'a [f64],
    low: &'a [f64],
    q: &'a [f64],
    lo: &'a [f64],
    hi: &'a [f64],
    w: &'a [f64],
}

impl Subproblem<'_> {
    fn coordinate(&self, j: usize, lambda: f64) -> f64 {
        let g = self.grad[j];
        if g > 0.0 {
            self.lo[j]
        } else if g < 0.0 {
            if lambda <= 0.0 {
                self.hi[j]
            } else {
                (self.low[j] + (self.q[j] / (lambda * self.w[j])).sqrt()).clamp(self.lo[j], self.hi[j])
            }
        } else if lambda > 0.0 {
            self.lo[j]
        } else {
            self.x[j].clamp(self.lo[j], self.hi[j])
        }
    }

    fn minimizer(&self, lambda: f64) -> Vec<f64> {
        (0..self.x.len()).map(|j| self.coordinate(j, lambda)).collect()
    }

    fn volume(&self, lambda: f64) -> f64 {
        (0..self.x.len()).map(|j| self.w[j] * self.coordinate(j, lambda)).sum()
    }

    /// Smallest multiplier whose minimizer satisfies the volume cap.
    fn multiplier(&self, cap: f64) -> f64 {
        if self.volume(0.0) <= cap {
            return 0.0;
        }
        let mut a = 0.0;
        let mut b = 1.0;
        while self.volume(b) > cap {
            a = b;
            b *= 2.0;
            if b > 1e300 {
                break;
            }
        }
        for _ in 0..200 {
            let m = 0.5 * (a + b);
            if m <= a || m >= b {
                break;
            }
            if self.volume(m) > cap {
                a = m;
            } else {
                b = m;
            }
        }
        b
    }
}

/// Iteration log of a full-order MMA run.
#[derive(Debug, Clone)]
pub struct MmaRun {
    /// `J(psi^(n))` for every evaluated iterate, starting at the initial design.
    pub objective: Vec<f64>,
    /// Projected-gradient stationarity measure at each evaluated iterate.
    pub stationarity: Vec<f64>,
    pub psi: Vec<f64>,
    pub rho: Vec<f64>,
    /// Intermediate filtered densities, when snapshots were requested.
    pub snapshots: Vec<(usize, Vec<f64>)>,
}

/// Options of [`hdm_mma_driver`].
#[derive(Debug, Clone)]
pub struct MmaDriverOptions {
    pub max_iters: usize,
    /// Stop once the projected-gradient norm drops below this value.
    pub tol: Option<f64>,
    /// Store `rho` every this many iterations (0 disables).
    pub snapshot_every: usize,
    /// `(J*, eps)`: stop at the first iterate with `|J - J*| < eps |J*|`.
    pub target: Option<(f64, f64)>,
    pub config: MmaConfig,
}

impl Default for MmaDriverOptions {
    fn default() -> Self {
        Self {
            max_iters: 2000,
            tol: None,
            snapshot_every: 0,
            target: None,
            config: MmaConfig::default(),
        }
    }
}

/// Plain MMA on the full-order model: one HDM solve and gradient per
/// iteration. `max_iters` counts HDM evaluations.
pub fn hdm_mma_driver(hdm: &Hdm, psi0: &[f64], options: &MmaDriverOptions) -> Result<MmaRun, Error> {
    let problem = hdm.problem();
    let constraint = VolumeConstraint::new(problem.volume_weights(), problem.volume)?;
    let mut state = MmaState::new(psi0.to_vec(), options.config.clone());
    let mut run = MmaRun {
        objective: Vec::with_capacity(options.max_iters),
        stationarity: Vec::with_capacity(options.max_iters),
        psi: psi0.to_vec(),
        rho: Vec::new(),
        snapshots: Vec::new(),
    };
    for it in 0..options.max_iters {
        let psi = state.x().to_vec();
        let (sol, grad) = hdm.evaluate(&psi)?;
        let stat = crate::trust_region::termination_measure(&psi, &grad, &constraint);
        run.objective.push(sol.value);
        run.stationarity.push(stat);
        if options.snapshot_every > 0 && it % options.snapshot_every == 0 {
            run.snapshots.push((it, sol.rho.clone()));
        }
        log::debug!("hdm-mma iter {it}: J = {:.6e}, stationarity = {stat:.3e}", sol.value);
        run.psi = psi;
        run.rho = sol.rho;
        let on_target = options
            .target
            .is_some_and(|(js, eps)| (run.objective[it] - js).abs() < eps * js.abs());
        if on_target || options.tol.is_some_and(|t| stat <= t) || it + 1 == options.max_iters {
            break;
        }
        state.step(&grad, &constraint)?;
    }
    Ok(run)
}
