//! Plain MMA on the full-order model of a benchmark beam, printing the
//! objective and stationarity history and writing the final density.
//!
//!     cargo run --release --example mbb_hdm_mma [problem] [iterations]

use std::sync::Arc;

use romtop::bench::{builtin_problem, export_density, DensityField, DensityFormat, RunConfig};
use romtop::hdm::{Compliance, Hdm};
use romtop::mma::{hdm_mma_driver, MmaDriverOptions};

fn main() -> Result<(), romtop::Error> {
    env_logger::init();
    let args: Vec<String> = std::env::args().collect();
    let name = args.get(1).map_or("mbb-small", String::as_str);
    let iters: usize = args
        .get(2)
        .map_or(Ok(200), |s| s.parse())
        .map_err(|_| romtop::Error::InvalidInput("iterations must be an integer".into()))?;
    let cfg = RunConfig::default();
    let spec = builtin_problem(name)?;
    println!("{}", spec.describe());

    let hdm = Hdm::new(Arc::new(spec.build(&cfg.model())?), Compliance)?;
    let options = MmaDriverOptions { max_iters: iters, config: cfg.mma(), ..Default::default() };
    let run = hdm_mma_driver(&hdm, &spec.initial_design(), &options)?;
    for (k, (j, s)) in run.objective.iter().zip(&run.stationarity).enumerate() {
        if k < 10 || k % 25 == 0 || k + 1 == run.objective.len() {
            println!("iter {k:4}  J = {j:12.6}  stationarity = {s:10.3e}");
        }
    }

    let path = std::env::temp_dir().join(format!("{name}_hdm_mma.pgm"));
    export_density(&DensityField::new(spec.nx, spec.ny, run.rho)?, &path, DensityFormat::Pgm)?;
    println!("final density written to {}", path.display());
    Ok(())
}
