//! Homodyne efficiency budget and parametric-gain calibration.

use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// SHG efficiency of the pump doubling stage, W⁻¹. Reference value for the
/// fitted parametric efficiency; not used in any model.
pub const ETA_SHG: f64 = 0.33;

/// `1 - 10^(-snr_db/10)`: electronic-noise efficiency for a detector
/// clearance of `snr_db`.
pub fn eta_el_from_snr_db(snr_db: f64) -> f64 {
    1.0 - 10f64.powf(-snr_db / 10.0)
}

/// Mode-matching efficiency from fringe visibility.
pub fn eta_mod_from_visibility(visibility: f64) -> f64 {
    visibility * visibility
}

/// Factors of the homodyne detection efficiency.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EfficiencyBudget {
    pub eta_pd: f64,
    pub eta_opt: f64,
    pub eta_mod: f64,
    pub eta_el: f64,
}

impl EfficiencyBudget {
    /// Derive `eta_mod` from the visibility and `eta_el` from the clearance.
    pub fn from_measurements(eta_pd: f64, eta_opt: f64, visibility: f64, snr_db: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&visibility) {
            return Err(Error::OutOfRange(format!("visibility {visibility} outside [0, 1]")));
        }
        if snr_db.is_nan() || snr_db < 0.0 {
            return Err(Error::OutOfRange(format!("clearance {snr_db} dB must be ≥ 0")));
        }
        let b = Self {
            eta_pd,
            eta_opt,
            eta_mod: eta_mod_from_visibility(visibility),
            eta_el: eta_el_from_snr_db(snr_db),
        };
        b.validate()?;
        Ok(b)
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("eta_pd", self.eta_pd),
            ("eta_opt", self.eta_opt),
            ("eta_mod", self.eta_mod),
            ("eta_el", self.eta_el),
        ] {
            if !(0.0..=1.0).contains(&v) {
                return Err(Error::OutOfRange(format!("{name} = {v} outside [0, 1]")));
            }
        }
        Ok(())
    }
}

/// `η_pd · η_el · η_opt · η_mod`.
pub fn total_efficiency(b: &EfficiencyBudget) -> Result<f64> {
    b.validate()?;
    Ok(b.eta_pd * b.eta_el * b.eta_opt * b.eta_mod)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GainBranch {
    Plus,
    Minus,
}

impl GainBranch {
    fn sign(self) -> f64 {
        match self {
            GainBranch::Plus => 1.0,
            GainBranch::Minus => -1.0,
        }
    }
}

/// `exp(±2 √(η P))` with `η` in W⁻¹ and `P` in W.
pub fn gain_model(eta_psa: f64, power_w: f64, branch: GainBranch) -> f64 {
    (branch.sign() * 2.0 * (eta_psa * power_w).sqrt()).exp()
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GainSample {
    pub power_w: f64,
    pub gain: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct GainFit {
    pub branch: GainBranch,
    pub eta_psa: f64,
    /// RMS of the residuals of `ln G`.
    pub residual_rms: f64,
    pub n_samples: usize,
}

/// Least-squares slope of `ln G = ±s √P` through the origin; `η = (s/2)²`.
pub fn fit_gain(samples: &[GainSample], branch: GainBranch) -> Result<GainFit> {
    if let Some(bad) = samples.iter().find(|s| !(s.power_w >= 0.0) || !(s.gain > 0.0)) {
        return Err(Error::OutOfRange(format!(
            "gain sample ({} W, {}) needs power ≥ 0 and gain > 0",
            bad.power_w, bad.gain
        )));
    }
    let used = samples.iter().filter(|s| s.power_w > 0.0).count();
    if used < 2 {
        return Err(Error::DegenerateFit(format!("need 2 samples with positive power, got {used}")));
    }
    let (mut suu, mut suy) = (0.0, 0.0);
    for s in samples {
        let u = s.power_w.sqrt();
        let y = branch.sign() * s.gain.ln();
        suu += u * u;
        suy += u * y;
    }
    let slope = suy / suu;
    if slope < 0.0 {
        return Err(Error::DegenerateFit(format!(
            "gain trend has the wrong sign for the {branch:?} branch"
        )));
    }
    let ss: f64 = samples
        .iter()
        .map(|s| (branch.sign() * s.gain.ln() - slope * s.power_w.sqrt()).powi(2))
        .sum();
    Ok(GainFit {
        branch,
        eta_psa: (slope / 2.0).powi(2),
        residual_rms: (ss / samples.len() as f64).sqrt(),
        n_samples: samples.len(),
    })
}

/// Columns `power_W, gain`.
pub fn read_gain_csv<R: Read>(input: R) -> Result<Vec<GainSample>> {
    let mut r = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(input);
    let headers = r.headers()?.clone();
    if headers.len() != 2 || &headers[0] != "power_W" || &headers[1] != "gain" {
        return Err(Error::Parse(format!("expected header 'power_W,gain', found {headers:?}")));
    }
    let mut out = Vec::new();
    for rec in r.records() {
        let rec = rec?;
        let parse = |s: &str| s.parse::<f64>().map_err(|e| Error::Parse(format!("gain CSV value {s:?}: {e}")));
        out.push(GainSample {
            power_w: parse(&rec[0])?,
            gain: parse(&rec[1])?,
        });
    }
    Ok(out)
}

pub fn write_gain_csv<W: Write>(samples: &[GainSample], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["power_W", "gain"])?;
    for s in samples {
        w.write_record([s.power_w.to_string(), s.gain.to_string()])?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use rand_distr::{Distribution, Normal};

    #[test]
    fn budget() {
        let b = EfficiencyBudget::from_measurements(0.85, 1.0, 0.77, 20.0).unwrap();
        assert!((b.eta_mod - 0.5929).abs() < 1e-12);
        assert_eq!(b.eta_el, 0.99);
        assert!((total_efficiency(&b).unwrap() - 0.4989).abs() < 1e-4);
        let one = EfficiencyBudget { eta_pd: 1.0, eta_opt: 1.0, eta_mod: 1.0, eta_el: 1.0 };
        assert_eq!(total_efficiency(&one).unwrap(), 1.0);
        assert!(total_efficiency(&EfficiencyBudget { eta_pd: 1.2, ..one }).is_err());
        assert!((eta_el_from_snr_db(400.0) - 1.0).abs() < 1e-15);
    }

    #[test]
    fn gain_values() {
        assert_eq!(gain_model(0.33, 0.0, GainBranch::Plus), 1.0);
        assert!((gain_model(0.33, 0.004, GainBranch::Plus) - 1.0754).abs() < 1e-4);
        assert!((gain_model(0.33, 0.004, GainBranch::Minus) - 0.9299).abs() < 1e-4);
        let p = gain_model(0.7, 0.3, GainBranch::Plus) * gain_model(0.7, 0.3, GainBranch::Minus);
        assert!((p - 1.0).abs() < 1e-15);
    }

    #[test]
    fn noiseless_round_trip() {
        for branch in [GainBranch::Plus, GainBranch::Minus] {
            let samples: Vec<GainSample> = (1..=10)
                .map(|k| {
                    let p = k as f64 * 1e-3;
                    GainSample { power_w: p, gain: gain_model(ETA_SHG, p, branch) }
                })
                .collect();
            let fit = fit_gain(&samples, branch).unwrap();
            assert!((fit.eta_psa / ETA_SHG - 1.0).abs() < 1e-10);
            assert!(fit.residual_rms < 1e-12);
        }
    }

    #[test]
    fn degenerate() {
        let zero = [GainSample { power_w: 0.0, gain: 1.0 }; 3];
        assert!(matches!(fit_gain(&zero, GainBranch::Plus), Err(Error::DegenerateFit(_))));
    }

    #[test]
    fn noisy_fit_mostly_within_ten_percent() {
        let noise = Normal::new(0.0, 0.05).unwrap();
        let mut ok = 0;
        for seed in 0..50 {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let samples: Vec<GainSample> = (0..10)
                .map(|k| {
                    let p = 0.1 + 0.1 * k as f64;
                    GainSample { power_w: p, gain: gain_model(ETA_SHG, p, GainBranch::Plus) * (1.0 + noise.sample(&mut rng)) }
                })
                .collect();
            let fit = fit_gain(&samples, GainBranch::Plus).unwrap();
            if (fit.eta_psa / ETA_SHG - 1.0).abs() <= 0.1 {
                ok += 1;
            }
        }
        assert!(ok >= 45, "{ok}/50");
    }

    #[test]
    fn csv_round_trip() {
        let s = vec![GainSample { power_w: 0.001, gain: 1.03 }, GainSample { power_w: 0.002, gain: 1.05 }];
        let mut buf = Vec::new();
        write_gain_csv(&s, &mut buf).unwrap();
        assert_eq!(read_gain_csv(buf.as_slice()).unwrap(), s);
    }
}
