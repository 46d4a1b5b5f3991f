//! Builds reduced models of growing dimension from MMA iterates on the small
//! MBB beam and compares the true compliance error with the residual bound
//! `|r|^2 / sigma_min` at a design away from the snapshots.
//!
//!     cargo run --release --example rom_error_bounds

use std::sync::Arc;

use romtop::bench::{builtin_problem, RunConfig};
use romtop::hdm::{Compliance, Hdm};
use romtop::mma::{MmaState, VolumeConstraint};
use romtop::rom::{build_basis, BoundMode, Rom, SnapshotWindow};

fn main() -> Result<(), romtop::Error> {
    let cfg = RunConfig::default();
    let spec = builtin_problem("mbb-small")?;
    let hdm = Hdm::new(Arc::new(spec.build(&cfg.model())?), Compliance)?;
    let c = VolumeConstraint::new(hdm.problem().volume_weights(), hdm.problem().volume)?;

    // Ten MMA iterates provide the snapshots; the eleventh is the test design.
    let mut state = MmaState::new(spec.initial_design(), cfg.mma());
    let mut window = SnapshotWindow::new(cfg.window);
    let mut center = None;
    for _ in 0..10 {
        let (sol, grad) = hdm.evaluate(state.x())?;
        if let Some((u, l)) = center.replace((sol.u.clone(), sol.lambda.clone())) {
            window.push(u, l);
        }
        state.step(&grad, &c)?;
    }
    let test = state.x().to_vec();
    let exact = hdm.solve(&test)?.value;
    let (center_u, center_l) = center.expect("ten iterates were evaluated");

    println!("{:>4} {:>14} {:>14} {:>14} {:>12}", "dim", "J_rom", "|J - J_rom|", "bound", "|r|");
    for n in 0..=window.len() {
        let basis = build_basis(&hdm, &window, n, &center_u, &center_l)?;
        let rom = Rom::new(hdm.clone(), Arc::new(basis))?;
        let sol = rom.solve(&test)?;
        let report = rom.error_bounds(&sol, BoundMode::Certified)?;
        let bound = report.compliance_error_bound.map_or("-".to_string(), |b| format!("{b:.6e}"));
        println!(
            "{:>4} {:>14.6} {:>14.6e} {:>14} {:>12.4e}",
            rom.basis().dim(),
            sol.value,
            (exact - sol.value).abs(),
            bound,
            report.residual
        );
    }
    println!("J(test) = {exact:.6}");
    Ok(())
}
