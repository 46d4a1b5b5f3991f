use std::fmt::Write as _;

use crate::Error;

use super::run::{equivalent_cost, row_cutoffs, Cutoff, IterationRow, Method, RunReport};

/// Text and CSV renderings of a convergence table.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub text: String,
    pub csv: String,
}

/// One row per report and tolerance: objective at the cutoff, solve counts
/// and equivalent cost. Runs that missed a tolerance show `-`.
pub fn report_table(reports: &[RunReport], epsilons: &[f64]) -> Table {
    let mut csv = String::from("problem,method,epsilon,tau,objective,hdm_solves,rom_solves,cost\n");
    let mut text = format!(
        "{:<12} {:<12} {:>8} {:>6} {:>14} {:>6} {:>7} {:>9}\n",
        "problem", "method", "eps", "tau", "objective", "#HDM", "#ROM", "C_eps"
    );
    for r in reports {
        let tau = r.tau.map_or_else(|| "-".to_string(), |t| t.to_string());
        for &eps in epsilons {
            let hit = r
                .cutoffs
                .iter()
                .find(|c| c.epsilon == eps)
                .and_then(|c| c.hit.as_ref());
            match hit {
                Some(h) => {
                    let cost = equivalent_cost(h.hdm_solves, h.rom_solves, r.nu);
                    let _ = writeln!(
                        csv,
                        "{},{},{eps},{tau},{:.12e},{},{},{cost}",
                        r.problem, r.method, h.objective, h.hdm_solves, h.rom_solves
                    );
                    let _ = writeln!(
                        text,
                        "{:<12} {:<12} {:>8} {:>6} {:>14.6} {:>6} {:>7} {:>9.2}",
                        r.problem, r.method.name(), eps, tau, h.objective, h.hdm_solves, h.rom_solves, cost
                    );
                }
                None => {
                    let _ = writeln!(csv, "{},{},{eps},{tau},,,,", r.problem, r.method);
                    let _ = writeln!(
                        text,
                        "{:<12} {:<12} {:>8} {:>6} {:>14} {:>6} {:>7} {:>9}",
                        r.problem, r.method.name(), eps, tau, "-", "-", "-", "-"
                    );
                }
            }
        }
    }
    Table { text, csv }
}

fn parse_err(msg: impl Into<String>) -> Error {
    Error::InvalidInput(format!("run log: {}", msg.into()))
}

fn opt_f64(s: &str) -> Result<Option<f64>, Error> {
    if s.is_empty() {
        Ok(None)
    } else {
        s.parse().map(Some).map_err(|_| parse_err(format!("bad number '{s}'")))
    }
}

fn num<T: std::str::FromStr>(s: &str) -> Result<T, Error> {
    s.parse().map_err(|_| parse_err(format!("bad number '{s}'")))
}

/// Reads a `run.csv` back into a report. Cutoffs are recomputed from the
/// rows with the given tolerances and `nu`; densities and timings are not
/// stored in the log and come back empty.
pub fn parse_run_csv(text: &str, epsilons: &[f64], nu: f64) -> Result<RunReport, Error> {
    let mut header = String::new();
    let mut problem = None;
    let mut method = None;
    let mut tau = None;
    let mut status = String::new();
    let mut j_star = None;
    let mut grid = (0, 0);
    let mut rows = Vec::new();
    for (n, line) in text.lines().enumerate() {
        if let Some(meta) = line.strip_prefix("# ") {
            if n == 0 {
                header = meta.to_string();
            } else if let Some(rest) = meta.strip_prefix("problem: ") {
                let parts: Vec<&str> = rest.split(", ").collect();
                if parts.len() != 4 {
                    return Err(parse_err("malformed problem line"));
                }
                problem = Some(parts[0].to_string());
                method = Some(parts[1].trim_start_matches("method: ").parse::<Method>()?);
                let t = parts[2].trim_start_matches("tau: ");
                tau = if t == "-" { None } else { Some(num::<f64>(t)?) };
                status = parts[3].trim_start_matches("status: ").to_string();
            } else if let Some(rest) = meta.strip_prefix("grid: ") {
                let mut it = rest.split_whitespace();
                grid = (
                    num(it.next().unwrap_or_default())?,
                    num(it.next().unwrap_or_default())?,
                );
            } else if let Some(rest) = meta.strip_prefix("j_star: ") {
                let v = rest.split(',').next().unwrap_or_default();
                j_star = if v == "unknown" { None } else { Some(num::<f64>(v)?) };
            }
            continue;
        }
        if line.starts_with("iteration,") || line.trim().is_empty() {
            continue;
        }
        let f: Vec<&str> = line.split(',').collect();
        if f.len() != 9 {
            return Err(parse_err(format!("expected 9 fields, found {}", f.len())));
        }
        rows.push(IterationRow {
            iteration: num(f[0])?,
            objective: num(f[1])?,
            accepted: f[2] == "1",
            delta: opt_f64(f[3])?,
            ratio: opt_f64(f[4])?,
            basis_dim: num(f[5])?,
            stationarity: opt_f64(f[6])?,
            hdm_solves: num(f[7])?,
            rom_solves: num(f[8])?,
        });
    }
    let method = method.ok_or_else(|| parse_err("missing problem line"))?;
    let last = rows.last().ok_or_else(|| parse_err("no iterations"))?;
    let final_objective = rows
        .iter()
        .rev()
        .find(|r| r.accepted)
        .map_or(last.objective, |r| r.objective);
    let cutoffs: Vec<Cutoff> = match j_star {
        Some(js) => row_cutoffs(&rows, js, epsilons, nu),
        None => Vec::new(),
    };
    Ok(RunReport {
        problem: problem.unwrap_or_default(),
        method,
        header,
        tau,
        nu,
        j_star,
        hdm_solves: last.hdm_solves,
        rom_solves: last.rom_solves,
        cutoffs,
        final_objective,
        rows,
        status,
        final_rho: Vec::new(),
        nx: grid.0,
        ny: grid.1,
        snapshots: Vec::new(),
        wall_time: Default::default(),
        config: Default::default(),
    })
}
