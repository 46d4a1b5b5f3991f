use std::fmt::{self, Write as _};
use std::str::FromStr;
use std::sync::Arc;
use std::time::{Duration, Instant};

use crate::hdm::{Compliance, Hdm};
use crate::mma::{hdm_mma_driver, MmaDriverOptions};
use crate::trust_region::{ConstraintKind, TrStatus, TrustRegion};
use crate::Error;

use super::{ProblemSpec, RunConfig};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Method {
    HdmMma,
    RomTrRes,
    RomTrDist,
    RomFixRes,
}

impl Method {
    pub const ALL: [Method; 4] = [Method::HdmMma, Method::RomTrRes, Method::RomTrDist, Method::RomFixRes];

    pub fn name(self) -> &'static str {
        match self {
            Method::HdmMma => "hdm-mma",
            Method::RomTrRes => "rom-tr-res",
            Method::RomTrDist => "rom-tr-dist",
            Method::RomFixRes => "rom-fix-res",
        }
    }

    pub fn uses_rom(self) -> bool {
        self != Method::HdmMma
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Error> {
        Method::ALL
            .into_iter()
            .find(|m| m.name() == s.to_ascii_lowercase())
            .ok_or_else(|| {
                let names: Vec<_> = Method::ALL.iter().map(|m| m.name()).collect();
                Error::InvalidInput(format!("unknown method '{s}', available: {}", names.join(", ")))
            })
    }
}

/// One line of the run log. For HDM-MMA every iterate is a row; for the
/// trust-region methods row 0 is the initial center and row `k` the `k`-th
/// major iteration (the candidate's objective when one was evaluated).
#[derive(Debug, Clone, PartialEq)]
pub struct IterationRow {
    pub iteration: usize,
    pub objective: f64,
    pub accepted: bool,
    pub delta: Option<f64>,
    pub ratio: Option<f64>,
    pub basis_dim: usize,
    pub stationarity: Option<f64>,
    pub hdm_solves: usize,
    pub rom_solves: usize,
}

/// First accepted iterate with `|J - J*| < eps |J*|`.
#[derive(Debug, Clone, PartialEq)]
pub struct Cutoff {
    pub epsilon: f64,
    /// `None` if the run never reached the tolerance.
    pub hit: Option<CutoffHit>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CutoffHit {
    pub iteration: usize,
    pub objective: f64,
    pub hdm_solves: usize,
    pub rom_solves: usize,
    /// `N_HDM + nu N_ROM`.
    pub cost: f64,
}

/// `C = N_HDM + nu N_ROM`.
pub fn equivalent_cost(hdm_solves: usize, rom_solves: usize, nu: f64) -> f64 {
    hdm_solves as f64 + nu * rom_solves as f64
}

#[derive(Debug, Clone)]
pub struct RunReport {
    pub problem: String,
    pub method: Method,
    /// Geometry and model assumptions, one line.
    pub header: String,
    pub tau: Option<f64>,
    pub nu: f64,
    pub j_star: Option<f64>,
    pub rows: Vec<IterationRow>,
    pub cutoffs: Vec<Cutoff>,
    pub final_objective: f64,
    pub hdm_solves: usize,
    pub rom_solves: usize,
    pub status: String,
    pub final_rho: Vec<f64>,
    pub nx: usize,
    pub ny: usize,
    /// Filtered densities `(iteration, rho)` every `snapshot_every` rows.
    pub snapshots: Vec<(usize, Vec<f64>)>,
    pub wall_time: Duration,
    pub config: RunConfig,
}

/// Cutoffs over the accepted rows of a run log.
pub fn row_cutoffs(rows: &[IterationRow], j_star: f64, epsilons: &[f64], nu: f64) -> Vec<Cutoff> {
    epsilons
        .iter()
        .map(|&epsilon| Cutoff {
            epsilon,
            hit: rows
                .iter()
                .find(|r| r.accepted && (r.objective - j_star).abs() < epsilon * j_star.abs())
                .map(|r| CutoffHit {
                    iteration: r.iteration,
                    objective: r.objective,
                    hdm_solves: r.hdm_solves,
                    rom_solves: r.rom_solves,
                    cost: equivalent_cost(r.hdm_solves, r.rom_solves, nu),
                }),
        })
        .collect()
}

/// Cutoffs of an HDM-MMA objective history, where iterate `n` costs `n + 1`
/// HDM solves.
pub fn history_cutoffs(history: &[f64], j_star: f64, epsilons: &[f64], nu: f64) -> Vec<Cutoff> {
    let rows: Vec<IterationRow> = history
        .iter()
        .enumerate()
        .map(|(n, &objective)| IterationRow {
            iteration: n,
            objective,
            accepted: true,
            delta: None,
            ratio: None,
            basis_dim: 0,
            stationarity: None,
            hdm_solves: n + 1,
            rom_solves: 0,
        })
        .collect();
    row_cutoffs(&rows, j_star, epsilons, nu)
}

fn reached_all(rows: &[IterationRow], j_star: Option<f64>, epsilons: &[f64]) -> bool {
    let Some(js) = j_star else { return false };
    let Some(tightest) = epsilons.iter().copied().reduce(f64::min) else {
        return false;
    };
    rows.last()
        .is_some_and(|r| r.accepted && (r.objective - js).abs() < tightest * js.abs())
}

/// Runs `method` on `spec`. With `j_star` given, cutoffs are evaluated and,
/// if `cfg.stop_at_cutoff` is set, the run ends once the tightest tolerance
/// is met.
pub fn run(spec: &ProblemSpec, method: Method, cfg: &RunConfig, j_star: Option<f64>) -> Result<RunReport, Error> {
    cfg.validate()?;
    let start = Instant::now();
    let problem = Arc::new(spec.build(&cfg.model())?);
    let hdm = Hdm::new(problem, Compliance)?;
    let psi0 = spec.initial_design();
    let stop_early = |rows: &[IterationRow]| cfg.stop_at_cutoff && reached_all(rows, j_star, &cfg.epsilons);
    let mut rows = Vec::new();
    let mut snapshots = Vec::new();
    let (final_objective, final_rho, status) = match method {
        Method::HdmMma => {
            let options = MmaDriverOptions {
                max_iters: cfg.max_iters,
                tol: Some(cfg.termination_tol),
                snapshot_every: cfg.snapshot_every,
                target: j_star
                    .filter(|_| cfg.stop_at_cutoff)
                    .zip(cfg.epsilons.iter().copied().reduce(f64::min)),
                config: cfg.mma(),
            };
            let mma = hdm_mma_driver(&hdm, &psi0, &options)?;
            for (n, (&objective, &stat)) in mma.objective.iter().zip(&mma.stationarity).enumerate() {
                rows.push(IterationRow {
                    iteration: n,
                    objective,
                    accepted: true,
                    delta: None,
                    ratio: None,
                    basis_dim: 0,
                    stationarity: Some(stat),
                    hdm_solves: n + 1,
                    rom_solves: 0,
                });
            }
            snapshots = mma.snapshots;
            let status = if stop_early(&rows) {
                "cutoff-reached"
            } else if mma.objective.len() < cfg.max_iters {
                "converged"
            } else {
                "max-iterations"
            };
            (*mma.objective.last().expect("at least one iterate"), mma.rho, status.to_string())
        }
        _ => {
            let (kind, adaptive) = match method {
                Method::RomTrRes => (ConstraintKind::Residual, true),
                Method::RomTrDist => (ConstraintKind::Distance, true),
                _ => (ConstraintKind::Residual, false),
            };
            let mut tr = TrustRegion::new(hdm.clone(), &psi0, cfg.trust_region(kind, adaptive))?;
            rows.push(IterationRow {
                iteration: 0,
                objective: tr.center_solution().value,
                accepted: true,
                delta: Some(tr.delta()),
                ratio: None,
                basis_dim: 0,
                stationarity: None,
                hdm_solves: hdm.stats().counts().hdm,
                rom_solves: 0,
            });
            if cfg.snapshot_every > 0 {
                snapshots.push((0, tr.center_solution().rho.clone()));
            }
            while !stop_early(&rows) {
                let Some(rec) = tr.step()? else { break };
                rows.push(IterationRow {
                    iteration: rec.iteration,
                    objective: rec.candidate_objective.unwrap_or(rec.center_objective),
                    accepted: rec.accepted,
                    delta: Some(rec.delta),
                    ratio: rec.ratio,
                    basis_dim: rec.basis_dim,
                    stationarity: Some(rec.center_stationarity),
                    hdm_solves: rec.hdm_total,
                    rom_solves: rec.rom_total,
                });
                let it = rec.iteration;
                if cfg.snapshot_every > 0 && it % cfg.snapshot_every == 0 {
                    snapshots.push((it, tr.center_solution().rho.clone()));
                }
            }
            let status = match tr.status() {
                TrStatus::Running => "cutoff-reached",
                TrStatus::Converged => "converged",
                TrStatus::Stalled => "stalled",
                TrStatus::MaxIterations => "max-iterations",
            };
            let c = tr.center_solution();
            (c.value, c.rho.clone(), status.to_string())
        }
    };
    let counts = hdm.stats().counts();
    let cutoffs = j_star.map_or_else(Vec::new, |js| row_cutoffs(&rows, js, &cfg.epsilons, cfg.nu));
    Ok(RunReport {
        problem: spec.name.clone(),
        method,
        header: spec.describe(),
        tau: method.uses_rom().then_some(cfg.tau),
        nu: cfg.nu,
        j_star,
        rows,
        cutoffs,
        final_objective,
        hdm_solves: counts.hdm,
        rom_solves: counts.rom,
        status,
        final_rho,
        nx: spec.nx,
        ny: spec.ny,
        snapshots,
        wall_time: start.elapsed(),
        config: cfg.clone(),
    })
}

fn opt(v: Option<f64>) -> String {
    v.map_or_else(String::new, |x| format!("{x:.12e}"))
}

impl RunReport {
    /// Iteration log with `#` header lines. Contains no timing data, so
    /// identical configurations produce identical files.
    pub fn to_csv(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "# {}", self.header);
        let tau = self.tau.map_or_else(|| "-".to_string(), |t| t.to_string());
        let _ = writeln!(s, "# problem: {}, method: {}, tau: {tau}, status: {}", self.problem, self.method, self.status);
        let _ = writeln!(s, "# grid: {} {}", self.nx, self.ny);
        let js = self.j_star.map_or_else(|| "unknown".to_string(), |v| format!("{v:.12e}"));
        let _ = writeln!(s, "# j_star: {js}, nu: {}", self.nu);
        for c in &self.cutoffs {
            match &c.hit {
                Some(h) => {
                    let _ = writeln!(
                        s,
                        "# cutoff eps={}: iteration {}, J = {:.12e}, hdm = {}, rom = {}, cost = {}",
                        c.epsilon, h.iteration, h.objective, h.hdm_solves, h.rom_solves, h.cost
                    );
                }
                None => {
                    let _ = writeln!(s, "# cutoff eps={}: not reached", c.epsilon);
                }
            }
        }
        s.push_str("iteration,objective,accepted,delta,ratio,basis_dim,stationarity,hdm_solves,rom_solves\n");
        for r in &self.rows {
            let _ = writeln!(
                s,
                "{},{:.12e},{},{},{},{},{},{},{}",
                r.iteration,
                r.objective,
                u8::from(r.accepted),
                opt(r.delta),
                opt(r.ratio),
                r.basis_dim,
                opt(r.stationarity),
                r.hdm_solves,
                r.rom_solves
            );
        }
        s
    }

    pub fn cutoff(&self, epsilon: f64) -> Option<&CutoffHit> {
        self.cutoffs.iter().find(|c| c.epsilon == epsilon)?.hit.as_ref()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn method_names_round_trip() {
        for m in Method::ALL {
            assert_eq!(m.name().parse::<Method>().unwrap(), m);
        }
        assert!("newton".parse::<Method>().is_err());
    }

    #[test]
    fn cost_formula() {
        assert!((equivalent_cost(23, 150, 0.01) - 24.5).abs() < 1e-12);
        assert_eq!(equivalent_cost(7, 99, 0.0), 7.0);
        assert_eq!(equivalent_cost(7, 0, 0.01), 7.0);
    }

    #[test]
    fn history_cutoffs_count_iterates() {
        let c = history_cutoffs(&[10.0, 5.0, 1.05, 1.0005], 1.0, &[0.1, 0.001], 0.01);
        let a = c[0].hit.as_ref().unwrap();
        assert_eq!((a.iteration, a.hdm_solves), (2, 3));
        let b = c[1].hit.as_ref().unwrap();
        assert_eq!((b.iteration, b.hdm_solves), (3, 4));
        assert!(history_cutoffs(&[2.0], 1.0, &[0.5], 0.01)[0].hit.is_none());
    }
}
