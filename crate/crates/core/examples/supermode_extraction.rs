//! Recover the eigenmodes of a squeezed state measured in a frexel basis.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use sqsim::entanglement::{extract_supermodes, DEFAULT_CROSS_TOL};
use sqsim::gaussian::{change_basis, BasisChange, CovarianceMatrix};
use sqsim::linalg::{to_complex, RMatrix};
use sqsim::modes::{frexel_basis, FrequencyGrid};
use sqsim::Result;

pub fn run_example() -> Result<f64> {
    let grid = FrequencyGrid::centered(1560.0, 40.0, 0.5)?;
    let basis = frexel_basis(&grid, (1532.0, 1588.0), 8)?;

    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut r: Vec<f64> = (0..8).map(|_| rng.gen_range(0.05..1.0)).collect();
    r.sort_by(|a, b| b.total_cmp(a));
    let m = RMatrix::from_fn(8, 8, |_, _| rng.gen_range(-1.0..1.0));
    let o = m.qr().q();

    // supermode k has frexel coefficients o[:, k]
    let cm = change_basis(&CovarianceMatrix::squeezed_vacuum_r(&r), &BasisChange::isometry(to_complex(&o))?)?;
    let rep = extract_supermodes(&cm, &basis, DEFAULT_CROSS_TOL)?;

    let mut worst: f64 = 1.0;
    for k in 0..8 {
        let ov = rep.x_vectors.column(k).dot(&o.column(k)).abs();
        worst = worst.min(ov);
        let expect = 10.0 * (-2.0 * r[k]).exp().log10();
        println!("mode {k}: {:.4} dB (expected {expect:.4}), overlap {ov:.6}", rep.squeezing_db[k]);
    }
    Ok(worst)
}

#[allow(dead_code)]
fn main() -> Result<()> {
    run_example().map(|_| ())
}
