//! Parametric efficiency from gain-versus-power data, plus the detection
//! efficiency budget.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use sqsim::calib::{fit_gain, gain_model, total_efficiency, EfficiencyBudget, GainBranch, GainSample, ETA_SHG};
use sqsim::Result;

pub fn run_example() -> Result<f64> {
    let budget = EfficiencyBudget::from_measurements(0.85, 1.0, 0.77, 20.0)?;
    println!("{budget:?}");
    println!("total efficiency {:.4}", total_efficiency(&budget)?);

    // 2% gain noise; at milliwatt powers ln G is too small to resolve it
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let noise = Normal::new(1.0, 0.02).expect("valid normal");
    let mut plus_eta = 0.0;
    for branch in [GainBranch::Plus, GainBranch::Minus] {
        let samples: Vec<GainSample> = (1..=10)
            .map(|i| {
                let p = 0.1 * i as f64;
                GainSample {
                    power_w: p,
                    gain: gain_model(ETA_SHG, p, branch) * noise.sample(&mut rng),
                }
            })
            .collect();
        let fit = fit_gain(&samples, branch)?;
        println!("{branch:?}: eta_psa = {:.4} W^-1, rms {:.2e}", fit.eta_psa, fit.residual_rms);
        if branch == GainBranch::Plus {
            plus_eta = fit.eta_psa;
        }
    }
    Ok(plus_eta)
}

#[allow(dead_code)]
fn main() -> Result<()> {
    run_example().map(|_| ())
}
