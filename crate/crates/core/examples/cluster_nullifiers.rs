//! Nullifier squeezing of the preset cluster topologies.

use sqsim::cluster::{cluster_unitary, nullifier_report, AdjacencyMatrix, PRESETS};
use sqsim::spdc::SqueezingSpectrum;
use sqsim::Result;

pub fn run_example() -> Result<()> {
    let spectrum = SqueezingSpectrum::from_r(vec![0.5; 8])?;
    for name in PRESETS {
        let v = AdjacencyMatrix::preset(name)?;
        let n = v.n_nodes();
        let ideal = nullifier_report(&v, &spectrum, None, &vec![1.0; n], None)?;
        let lossy = nullifier_report(&v, &spectrum, None, &vec![0.5; n], None)?;
        println!(
            "{name:8} {n} nodes: {:.3} dB lossless, median {:.3} dB at eta = 0.5",
            ideal.stats.median, lossy.stats.median
        );
    }

    // unequal squeezing spreads the nullifiers
    let ladder = SqueezingSpectrum::from_r((0..8).map(|k| 0.6 - 0.06 * k as f64).collect())?;
    let v = AdjacencyMatrix::preset("linear8")?;
    let rep = nullifier_report(&v, &ladder, None, &[1.0; 8], None)?;
    println!(
        "linear8 on a squeezing ladder: [{:.3}, {:.3}] dB",
        rep.stats.min, rep.stats.max
    );
    let u = cluster_unitary(&v, None)?;
    println!("U is {0}x{0}", u.n_nodes());
    Ok(())
}

#[allow(dead_code)]
fn main() -> Result<()> {
    run_example()
}
