//! Residual-constrained trust-region optimization of the small MBB beam,
//! compared with plain MMA on the full model.
//!
//!     cargo run --release --example rom_trust_region [problem] [method] [tau]

use romtop::bench::{builtin_problem, load_or_compute_reference, report_table, run, Method, RunConfig};

fn main() -> Result<(), romtop::Error> {
    env_logger::init();
    let args: Vec<String> = std::env::args().collect();
    let problem = args.get(1).map_or("mbb-small", String::as_str);
    let method: Method = args.get(2).map_or("rom-tr-res", String::as_str).parse()?;
    let mut cfg = RunConfig::default();
    if let Some(tau) = args.get(3) {
        cfg.tau = tau.parse().map_err(|_| romtop::Error::InvalidInput(format!("bad tau '{tau}'")))?;
    }
    let spec = builtin_problem(problem)?;
    let cache = std::env::temp_dir().join("romtop-references");
    let reference = load_or_compute_reference(&cache, &spec, &cfg, true)?;
    println!("{}", spec.describe());
    println!("J* = {:.6}", reference.j_star);

    let report = run(&spec, method, &cfg, Some(reference.j_star))?;
    for row in &report.rows {
        println!(
            "iter {:3}  J = {:12.6}  accepted = {:5}  delta = {:10.3e}  ratio = {:>10}  k = {:2}  hdm = {:3}  rom = {:4}",
            row.iteration,
            row.objective,
            row.accepted,
            row.delta.unwrap_or(f64::NAN),
            row.ratio.map_or("-".to_string(), |r| format!("{r:.3}")),
            row.basis_dim,
            row.hdm_solves,
            row.rom_solves
        );
    }
    println!("status: {}", report.status);
    let baseline = run(&spec, Method::HdmMma, &cfg, Some(reference.j_star))?;
    print!("{}", report_table(&[baseline, report], &cfg.epsilons).text);
    Ok(())
}
