//! Hermite-Gauss and flat spectral modes on a wavelength grid.

use sqsim::modes::{flat_basis, frexel_basis, hermite_gauss_basis, FrequencyGrid};
use sqsim::Result;

pub fn run_example() -> Result<()> {
    let grid = FrequencyGrid::centered(1560.0, 160.0, 1.0)?;
    let hg = hermite_gauss_basis(&grid, 1560.0, 45.0, 21)?;
    println!("{} HG modes, max |G - I| = {:.2e}", hg.len(), hg.orthonormality_deviation());
    for k in [0, 1, 5, 20] {
        println!("  HG{k}: {} sign changes", hg.mode(k).sign_changes(1e-3));
    }

    let flat = flat_basis(&hg, 4)?;
    println!("flat modes (overlap with the HG counterpart):");
    for k in 0..flat.len() {
        let ov = hg.mode(k).inner(flat.mode(k)).norm();
        println!("  flat{k}: {ov:.4}");
    }

    let frexels = frexel_basis(&grid, (1532.0, 1588.0), 8)?;
    let w: Vec<String> = frexels.modes().iter().map(|m| format!("{:.3}", hg.mode(0).inner(m).norm())).collect();
    println!("HG0 overlap with each frexel: [{}]", w.join(", "));
    Ok(())
}

#[allow(dead_code)]
fn main() -> Result<()> {
    run_example()
}
