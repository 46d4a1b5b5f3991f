//! Projection onto the box intersected with a volume halfspace, and the
//! stationarity measures built on it.
//!
//!     cargo run --example projection

use romtop::mma::VolumeConstraint;
use romtop::trust_region::{criticality_chi, project, termination_measure};

fn main() -> Result<(), romtop::Error> {
    let c = VolumeConstraint::new(vec![1.0; 5], 2.0)?;
    let y = [1.4, 0.9, 0.6, -0.3, 0.2];
    let p = project(&y, &c);
    println!("y        = {y:?}");
    println!("P_C(y)   = {p:.6?}");
    println!("volume   = {:.6} (cap {})", c.volume(&p), c.cap);

    let psi = [1.0, 0.5, 0.5, 0.0, 0.0];
    for g in [[-1.0, -1.0, -1.0, 1.0, 1.0], [-1.0, 0.2, -0.2, 1.0, 1.0], [1.0, 1.0, 1.0, -1.0, -1.0]] {
        let m = termination_measure(&psi, &g, &c);
        let chi = criticality_chi(&psi, &g, &c);
        println!("g = {g:?}: |psi - P_C(psi - g)| = {m:.6}, chi = {chi:.6?}");
    }
    Ok(())
}
