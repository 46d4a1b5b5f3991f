//! Runs HDM-MMA and both trust-region variants on one problem and prints
//! the convergence table at the configured tolerances.
//!
//!     cargo run --release --example benchmark_table [problem] [config.toml]

use romtop::bench::{builtin_problem, load_or_compute_reference, report_table, run, Method, RunConfig};

fn main() -> Result<(), romtop::Error> {
    env_logger::init();
    let args: Vec<String> = std::env::args().collect();
    let name = args.get(1).map_or("mbb-small", String::as_str);
    let cfg = match args.get(2) {
        Some(path) => RunConfig::load(path.as_ref())?,
        None => RunConfig::default(),
    };
    let spec = builtin_problem(name)?;
    let cache = std::env::temp_dir().join("romtop-references");
    let reference = load_or_compute_reference(&cache, &spec, &cfg, true)?;
    println!("{}", spec.describe());
    println!("J* = {:.6} ({} HDM-MMA iterations)", reference.j_star, reference.iterations);

    let mut reports = Vec::new();
    for method in [Method::HdmMma, Method::RomTrRes, Method::RomTrDist] {
        let report = run(&spec, method, &cfg, Some(reference.j_star))?;
        println!("{}: {} after {} iterations", method.name(), report.status, report.rows.len());
        reports.push(report);
    }
    print!("{}", report_table(&reports, &cfg.epsilons).text);
    Ok(())
}
