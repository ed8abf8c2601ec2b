//! Optical clipping turns 21 Hermite-Gauss modes into a smaller set of
//! linearly independent ones.

use sqsim::modes::{
    apply_clipping, fit_clipping_window, hermite_gauss_basis, rank_analysis, ClippingWindow, FrequencyGrid,
    CLIPPED_HG_SINGULAR_VALUES,
};
use sqsim::Result;

pub fn run_example() -> Result<usize> {
    let grid = FrequencyGrid::centered(1560.0, 160.0, 1.0)?;
    let hg = hermite_gauss_basis(&grid, 1560.0, 45.0, 21)?;

    let fit = fit_clipping_window(&hg, &CLIPPED_HG_SINGULAR_VALUES, 0.1)?;
    println!(
        "fitted window [{:.0}, {:.0}] nm, residual {:.4}",
        fit.window.lo(),
        fit.window.hi(),
        fit.residual
    );
    println!("rank {} of {}, sigma_max {:.3}", fit.report.rank, hg.len(), fit.report.singular_values[0]);
    for (k, (s, t)) in fit.report.singular_values.iter().zip(CLIPPED_HG_SINGULAR_VALUES).enumerate() {
        println!("  {k:2} {s:.4} (reference {t:.4})");
    }

    // a tighter window loses more modes
    let narrow = ClippingWindow::new(&grid, 1530.0, 1590.0)?;
    let report = rank_analysis(&apply_clipping(&hg, &narrow, true)?, 0.1)?;
    println!("[1530, 1590] nm: rank {}", report.rank);
    Ok(fit.report.rank)
}

#[allow(dead_code)]
fn main() -> Result<()> {
    run_example().map(|_| ())
}
