use num_complex::Complex64 as C64;
use serde::Serialize;

use super::JsaGrid;
use crate::error::{Error, Result};
use crate::linalg::CMatrix;
use crate::modes::{ModeBasis, SpectralMode};

/// Default cap on the number of kept Schmidt modes.
pub const DEFAULT_MAX_MODES: usize = 64;

/// Coefficients below this fraction of the largest are discarded.
pub const RELATIVE_CUTOFF: f64 = 1e-8;

/// `J(λs, λi) = Σ_k λ_k h_k(λs) g_k(λi)` with orthonormal `h_k`, `g_k`.
#[derive(Clone, Debug)]
pub struct SchmidtDecomposition {
    coefficients: Vec<f64>,
    signal_modes: ModeBasis,
    idler_modes: ModeBasis,
    schmidt_number: f64,
    reconstruction_error: f64,
    truncated_mass: f64,
}

/// JSON summary of a decomposition.
#[derive(Clone, Debug, Serialize)]
pub struct SchmidtReport {
    pub coefficients: Vec<f64>,
    pub schmidt_number: f64,
    pub reconstruction_error: f64,
    pub truncated_mass: f64,
}

impl SchmidtDecomposition {
    /// Descending, `Σ λ_k² = 1` over the kept modes.
    pub fn coefficients(&self) -> &[f64] {
        &self.coefficients
    }

    pub fn signal_modes(&self) -> &ModeBasis {
        &self.signal_modes
    }

    pub fn idler_modes(&self) -> &ModeBasis {
        &self.idler_modes
    }

    /// `K = 1 / Σ λ_k⁴`.
    pub fn schmidt_number(&self) -> f64 {
        self.schmidt_number
    }

    /// Weighted Frobenius norm of `J - Σ σ_k h_k g_k` using the raw
    /// (pre-renormalization) singular values.
    pub fn reconstruction_error(&self) -> f64 {
        self.reconstruction_error
    }

    /// `Σ σ_k²` over discarded modes.
    pub fn truncated_mass(&self) -> f64 {
        self.truncated_mass
    }

    pub fn len(&self) -> usize {
        self.coefficients.len()
    }

    pub fn is_empty(&self) -> bool {
        self.coefficients.is_empty()
    }

    pub fn report(&self) -> SchmidtReport {
        SchmidtReport {
            coefficients: self.coefficients.clone(),
            schmidt_number: self.schmidt_number,
            reconstruction_error: self.reconstruction_error,
            truncated_mass: self.truncated_mass,
        }
    }

    /// Phases `c_k = <h_k, g_k>` relating idler to signal modes. Only
    /// meaningful for a symmetric JSA on a shared grid, where `g_k = c_k h_k`.
    pub fn idler_phases(&self) -> Result<Vec<C64>> {
        if !self.signal_modes.grid().same_as(self.idler_modes.grid()) {
            return Err(Error::InvalidMode("signal and idler grids differ".into()));
        }
        Ok(self
            .signal_modes
            .modes()
            .iter()
            .zip(self.idler_modes.modes())
            .map(|(h, g)| h.inner(g))
            .collect())
    }

    /// Supermode basis of a degenerate source: `u_k = sqrt(c_k) h_k`, so that
    /// `J = Σ λ_k u_k u_kᵀ` and every supermode is squeezed along the same
    /// quadrature. Fails when some `|c_k|` is not 1 (asymmetric JSA or
    /// degenerate coefficients mixing modes).
    pub fn supermodes(&self) -> Result<ModeBasis> {
        let phases = self.idler_phases()?;
        let mut modes = Vec::with_capacity(phases.len());
        for (k, (c, h)) in phases.iter().zip(self.signal_modes.modes()).enumerate() {
            if (c.norm() - 1.0).abs() > 1e-6 {
                return Err(Error::Numerical(format!(
                    "Schmidt pair {k} is not symmetric: |<h, g>| = {:.8}",
                    c.norm()
                )));
            }
            modes.push(h.scaled(c.sqrt()));
        }
        Ok(ModeBasis::orthonormal("supermodes", modes)?.with_conventions(self.signal_modes.conventions().clone()))
    }
}

/// Schmidt decomposition via SVD of `W_s^{1/2} J W_i^{1/2}`, so the modes are
/// orthonormal as sampled functions.
///
/// Keeps at most `max_modes` and drops coefficients below
/// [`RELATIVE_CUTOFF`] of the largest; kept coefficients are renormalized and
/// the discarded mass is reported. Each signal mode is rotated so that its
/// largest-magnitude sample is positive real, with the compensating phase
/// moved to the idler mode.
pub fn schmidt_decompose(jsa: &JsaGrid, max_modes: usize) -> Result<SchmidtDecomposition> {
    if max_modes == 0 {
        return Err(Error::OutOfRange("max_modes must be at least 1".into()));
    }
    let (gs, gi) = (jsa.grid_s(), jsa.grid_i());
    let sws: Vec<f64> = gs.weights().iter().map(|w| w.sqrt()).collect();
    let swi: Vec<f64> = gi.weights().iter().map(|w| w.sqrt()).collect();
    let m = CMatrix::from_fn(gs.len(), gi.len(), |r, c| jsa.values()[(r, c)] * (sws[r] * swi[c]));
    let svd = crate::linalg::svd(&m)?;
    let (u, v) = (&svd.u, &svd.v);
    let sigma = svd.singular_values;
    let total: f64 = sigma.iter().map(|s| s * s).sum();
    if !(total > 0.0) {
        return Err(Error::Numerical("JSA has zero norm".into()));
    }

    let keep = sigma
        .iter()
        .take(max_modes)
        .take_while(|&&s| s >= RELATIVE_CUTOFF * sigma[0])
        .count();

    let mut signal = Vec::with_capacity(keep);
    let mut idler = Vec::with_capacity(keep);
    for k in 0..keep {
        let mut h: Vec<C64> = (0..gs.len()).map(|r| u[(r, k)] / sws[r]).collect();
        let mut g: Vec<C64> = (0..gi.len()).map(|c| v[(c, k)].conj() / swi[c]).collect();
        let peak = h
            .iter()
            .copied()
            .enumerate()
            .max_by(|a, b| a.1.norm().total_cmp(&b.1.norm()).then(b.0.cmp(&a.0)))
            .map(|(_, z)| z)
            .unwrap_or(C64::new(1.0, 0.0));
        let phase = C64::from_polar(1.0, -peak.arg());
        h.iter_mut().for_each(|z| *z *= phase);
        g.iter_mut().for_each(|z| *z /= phase);
        signal.push(SpectralMode::unnormalized(gs, h)?);
        idler.push(SpectralMode::unnormalized(gi, g)?);
    }

    let mut residual = jsa.values().clone();
    for (k, (h, g)) in signal.iter().zip(&idler).enumerate() {
        let s = C64::new(sigma[k], 0.0);
        for c in 0..gi.len() {
            let gc = g.amplitude()[c] * s;
            for r in 0..gs.len() {
                residual[(r, c)] -= h.amplitude()[r] * gc;
            }
        }
    }
    let mut err = 0.0;
    for c in 0..gi.len() {
        for r in 0..gs.len() {
            err += gs.weights()[r] * gi.weights()[c] * residual[(r, c)].norm_sqr();
        }
    }

    let kept_mass: f64 = sigma[..keep].iter().map(|s| s * s).sum();
    let coefficients: Vec<f64> = sigma[..keep].iter().map(|s| s / kept_mass.sqrt()).collect();
    let schmidt_number = 1.0 / coefficients.iter().map(|l| l.powi(4)).sum::<f64>();
    let truncated_mass = (total - kept_mass).max(0.0) / total;

    Ok(SchmidtDecomposition {
        coefficients,
        signal_modes: ModeBasis::orthonormal("schmidt-signal", signal)?,
        idler_modes: ModeBasis::orthonormal("schmidt-idler", idler)?,
        schmidt_number,
        reconstruction_error: err.sqrt(),
        truncated_mass,
    })
}

/// Per-supermode squeezing parameters `r_k = g λ_k`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SqueezingSpectrum {
    pub r: Vec<f64>,
    pub pump_scale: f64,
}

impl SqueezingSpectrum {
    /// Explicit squeezing parameters (e.g. for tests or cluster inputs).
    pub fn from_r(r: Vec<f64>) -> Result<Self> {
        if r.iter().any(|&x| !(x >= 0.0) || !x.is_finite()) {
            return Err(Error::OutOfRange("squeezing parameters must be finite and ≥ 0".into()));
        }
        Ok(Self { r, pump_scale: f64::NAN })
    }

    pub fn len(&self) -> usize {
        self.r.len()
    }

    pub fn is_empty(&self) -> bool {
        self.r.is_empty()
    }
}

pub fn squeezing_spectrum(coefficients: &[f64], pump_scale: f64) -> Result<SqueezingSpectrum> {
    if !(pump_scale >= 0.0) || !pump_scale.is_finite() {
        return Err(Error::OutOfRange(format!("pump scale must be ≥ 0, got {pump_scale}")));
    }
    Ok(SqueezingSpectrum {
        r: coefficients.iter().map(|l| pump_scale * l).collect(),
        pump_scale,
    })
}

/// Squeezing parameter whose p variance, after efficiency `eta`, reads
/// `target_db` (negative) relative to shot noise.
pub fn squeezing_for_measured_db(target_db: f64, eta: f64) -> Result<f64> {
    if !(eta > 0.0 && eta <= 1.0) {
        return Err(Error::OutOfRange(format!("efficiency {eta} outside (0, 1]")));
    }
    let ratio = 10f64.powf(target_db / 10.0);
    let pure = (ratio - (1.0 - eta)) / eta;
    if !(target_db <= 0.0) || !(pure > 0.0) {
        return Err(Error::OutOfRange(format!(
            "{target_db} dB is not reachable with efficiency {eta} (floor {:.3} dB)",
            10.0 * (1.0 - eta).log10()
        )));
    }
    Ok(-0.5 * pure.ln())
}

/// Pump scale `g` that makes the leading supermode read `target_db` after
/// efficiency `eta`.
pub fn pump_scale_for_db(coefficients: &[f64], target_db: f64, eta: f64) -> Result<f64> {
    let lead = coefficients
        .first()
        .copied()
        .filter(|&l| l > 0.0)
        .ok_or_else(|| Error::OutOfRange("no positive Schmidt coefficient".into()))?;
    Ok(squeezing_for_measured_db(target_db, eta)? / lead)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::modes::{hermite_gauss_mode, FrequencyGrid};

    fn double_gaussian(sp: f64, sm: f64) -> JsaGrid {
        let g = FrequencyGrid::centered(1560.0, 120.0, 0.5).unwrap();
        JsaGrid::from_fn(&g, &g, |a, b| {
            let (x, y) = (a - 1560.0, b - 1560.0);
            C64::new(
                (-(x + y).powi(2) / (4.0 * sp * sp) - (x - y).powi(2) / (4.0 * sm * sm)).exp(),
                0.0,
            )
        })
        .unwrap()
    }

    #[test]
    fn separable_is_rank_one() {
        let g = FrequencyGrid::centered(1560.0, 50.0, 0.5).unwrap();
        let j = JsaGrid::from_fn(&g, &g, |a, b| {
            C64::new((-(a - 1555.0).powi(2) / 50.0).exp() * (-(b - 1565.0).powi(2) / 80.0).exp(), 0.0)
        })
        .unwrap();
        let s = schmidt_decompose(&j, 64).unwrap();
        assert_eq!(s.len(), 1);
        assert!((s.schmidt_number() - 1.0).abs() < 1e-12);
        assert!(s.reconstruction_error() < 1e-10, "{}", s.reconstruction_error());
    }

    #[test]
    fn double_gaussian_is_geometric_hermite_gauss() {
        let (sp, sm) = (20.0, 5.0);
        let s = schmidt_decompose(&double_gaussian(sp, sm), 64).unwrap();
        let mu = (sp - sm) / (sp + sm);
        let width = 2.0 * std::f64::consts::SQRT_2 * (sp * sm).sqrt();
        let l = s.coefficients();
        for k in 0..=10 {
            let expect = (1.0 - mu * mu).sqrt() * mu.powi(k as i32);
            assert!((l[k] - expect).abs() / expect < 1e-6, "k={k}: {} vs {expect}", l[k]);
            let hg = hermite_gauss_mode(s.signal_modes().grid(), 1560.0, width, k).unwrap();
            assert!(hg.inner(s.signal_modes().mode(k)).norm() > 1.0 - 1e-6, "mode {k}");
        }
        let k_expect = (1.0 + mu * mu) / (1.0 - mu * mu);
        assert!((s.schmidt_number() - k_expect).abs() / k_expect < 1e-6);
    }

    #[test]
    fn symmetric_jsa_modes_agree_up_to_sign() {
        let s = schmidt_decompose(&double_gaussian(20.0, 5.0), 12).unwrap();
        for (k, c) in s.idler_phases().unwrap().iter().enumerate() {
            assert!((c.norm() - 1.0).abs() < 1e-8);
            assert!(c.im.abs() < 1e-8, "mode {k} phase {c}");
        }
        let sup = s.supermodes().unwrap();
        assert!(sup.orthonormality_deviation() < 1e-10);
    }

    #[test]
    fn truncation_mass_reported() {
        let s = schmidt_decompose(&double_gaussian(20.0, 5.0), 5).unwrap();
        let sum: f64 = s.coefficients().iter().map(|l| l * l).sum();
        assert!((sum - 1.0).abs() < 1e-12);
        let mu: f64 = 0.6;
        assert!((s.truncated_mass() - mu.powi(10)).abs() < 1e-8);
    }

    #[test]
    fn squeezing_spectrum_scales() {
        assert!(squeezing_spectrum(&[0.8, 0.6], 0.0).unwrap().r.iter().all(|&r| r == 0.0));
        let sp = squeezing_spectrum(&[1.0], 1.151).unwrap();
        let db = 10.0 * (-2.0 * sp.r[0]).exp().log10();
        assert!((db + 10.0).abs() < 5e-3, "{db}");
        assert!(squeezing_spectrum(&[1.0], -1.0).is_err());
    }

    #[test]
    fn measured_db_inversion() {
        let r = squeezing_for_measured_db(-2.5, 0.4989).unwrap();
        let v = 0.4989 * (-2.0 * r).exp() + 1.0 - 0.4989;
        assert!((10.0 * v.log10() + 2.5).abs() < 1e-12);
        assert!(squeezing_for_measured_db(-4.0, 0.5).is_err());
    }
}
