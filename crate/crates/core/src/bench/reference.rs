use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::hdm::{Compliance, Hdm};
use crate::mma::{hdm_mma_driver, MmaDriverOptions};
use crate::Error;

use super::{ProblemSpec, RunConfig};

/// Cached outcome of the long HDM-MMA run that defines `J*`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Reference {
    pub problem: String,
    pub key: String,
    pub iterations: usize,
    pub j_star: f64,
    /// `J(psi^(n))` for `n = 0..iterations`.
    pub history: Vec<f64>,
}

/// Hex SHA-256 over everything that changes the HDM-MMA trajectory.
pub fn reference_key(spec: &ProblemSpec, cfg: &RunConfig) -> String {
    let spec_text = toml::to_string(spec).expect("problem spec serializes");
    let m = cfg.model();
    let mma = cfg.mma();
    let mut h = Sha256::new();
    h.update(spec_text.as_bytes());
    for v in [
        m.youngs_modulus,
        m.poisson_ratio,
        m.penal,
        m.rho_min,
        m.filter_length_factor,
        mma.asymptote_init,
        mma.asymptote_expand,
        mma.asymptote_contract,
        mma.asymptote_min,
        mma.asymptote_max,
        mma.move_limit,
    ] {
        h.update(v.to_le_bytes());
    }
    h.update((cfg.reference_iters as u64).to_le_bytes());
    hex::encode(h.finalize())
}

pub fn reference_path(dir: &Path, spec: &ProblemSpec, cfg: &RunConfig) -> PathBuf {
    let key = reference_key(spec, cfg);
    dir.join(format!("reference_{}_{}.toml", spec.name, &key[..16]))
}

/// Runs `reference_iters` HDM-MMA iterations; `J*` is the last value.
pub fn compute_reference(spec: &ProblemSpec, cfg: &RunConfig) -> Result<Reference, Error> {
    if cfg.reference_iters == 0 {
        return Err(Error::Config("reference_iters must be positive".into()));
    }
    let problem = std::sync::Arc::new(spec.build(&cfg.model())?);
    let hdm = Hdm::new(problem, Compliance)?;
    let options = MmaDriverOptions {
        max_iters: cfg.reference_iters,
        tol: None,
        snapshot_every: 0,
        target: None,
        config: cfg.mma(),
    };
    let run = hdm_mma_driver(&hdm, &spec.initial_design(), &options)?;
    Ok(Reference {
        problem: spec.name.clone(),
        key: reference_key(spec, cfg),
        iterations: run.objective.len(),
        j_star: *run.objective.last().expect("at least one iteration"),
        history: run.objective,
    })
}

/// Loads the cached reference for `spec`, computing and storing it when
/// absent unless `allow_compute` is false.
pub fn load_or_compute_reference(
    dir: &Path,
    spec: &ProblemSpec,
    cfg: &RunConfig,
    allow_compute: bool,
) -> Result<Reference, Error> {
    let path = reference_path(dir, spec, cfg);
    if path.exists() {
        let r: Reference = toml::from_str(&std::fs::read_to_string(&path)?)
            .map_err(|e| Error::MissingReference(format!("{}: {e}", path.display())))?;
        if r.key == reference_key(spec, cfg) {
            return Ok(r);
        }
        log::warn!("ignoring stale reference {}", path.display());
    }
    if !allow_compute {
        return Err(Error::MissingReference(format!(
            "no cached reference at {}",
            path.display()
        )));
    }
    log::info!("computing reference for {} ({} HDM-MMA iterations)", spec.name, cfg.reference_iters);
    let r = compute_reference(spec, cfg)?;
    std::fs::create_dir_all(dir)?;
    let text = toml::to_string(&r).map_err(|e| Error::Config(e.to_string()))?;
    std::fs::write(&path, text)?;
    Ok(r)
}
