//! Simulated 8-frexel covariance matrix and its PPT bipartition scan.

use sqsim::entanglement::{ppt_scan, TOL_PPT};
use sqsim::pipeline::{frexel_covariance, ExperimentConfig};
use sqsim::Result;

pub fn run_example() -> Result<f64> {
    let cfg = ExperimentConfig::default();
    let (cm, basis, model) = frexel_covariance(&cfg)?;
    println!(
        "{} frexels, K = {:.1}, g = {:.3}, eta = {:.4}",
        basis.len(),
        model.schmidt.schmidt_number(),
        model.spectrum.pump_scale,
        model.eta
    );
    println!("|xp| = {:.1e}, trace {:.3}", cm.xp_norm(), cm.trace());

    let report = ppt_scan(&cm, TOL_PPT)?;
    println!(
        "{} of {} bipartitions violate PPT ({:.1}%)",
        report.n_violated,
        report.entries.len(),
        100.0 * report.fraction_violated
    );
    let worst = report.entries.iter().min_by(|a, b| a.value.total_cmp(&b.value)).expect("non-empty");
    println!("most negative: {:.4} for subset {:?}", worst.value, worst.bipartition.subset_a());
    Ok(report.fraction_violated)
}

#[allow(dead_code)]
fn main() -> Result<()> {
    run_example().map(|_| ())
}
