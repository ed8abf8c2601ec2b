//! Joint spectral amplitude of degenerate type-0 down-conversion and its
//! Schmidt (supermode) decomposition.

mod jsa;
mod schmidt;
mod source;

pub use jsa::{build_jsa, JsaGrid};
pub use schmidt::{
    pump_scale_for_db, schmidt_decompose, squeezing_for_measured_db, squeezing_spectrum, SchmidtDecomposition,
    SchmidtReport, SqueezingSpectrum, DEFAULT_MAX_MODES, RELATIVE_CUTOFF,
};
pub use source::{MismatchCoefficients, PhaseMatchKind, PhaseMatchModel, PumpEnvelope, PumpShape};

use crate::error::Result;
use crate::modes::{fit_hg0_width, FrequencyGrid};
use crate::optim::bisect;

/// Result of tuning the quadratic mismatch to a target supermode width.
#[derive(Clone, Debug)]
pub struct MismatchFit {
    pub phase_match: PhaseMatchModel,
    pub schmidt: SchmidtDecomposition,
    /// Fitted full 1/e amplitude width of the leading supermode (nm).
    pub width_nm: f64,
    /// |overlap| between the leading supermode and its HG0 fit.
    pub hg0_overlap: f64,
}

/// Leading-supermode HG0 width for a given model on a shared grid.
pub fn leading_mode_width(
    pump: &PumpEnvelope,
    pm: &PhaseMatchModel,
    grid: &FrequencyGrid,
    max_modes: usize,
) -> Result<(SchmidtDecomposition, f64, f64)> {
    let schmidt = schmidt_decompose(&build_jsa(pump, pm, grid, grid)?, max_modes)?;
    let (width, overlap) = fit_hg0_width(schmidt.signal_modes().mode(0), grid.center())?;
    Ok((schmidt, width, overlap))
}

/// Tune `c20 = c02` (searched log-uniformly in `c2_range`, other
/// coefficients kept) so the leading supermode has HG0 width `target_nm`.
pub fn fit_quadratic_mismatch(
    pump: &PumpEnvelope,
    template: &PhaseMatchModel,
    grid: &FrequencyGrid,
    target_nm: f64,
    c2_range: (f64, f64),
    max_modes: usize,
) -> Result<MismatchFit> {
    let with_c2 = |c2: f64| {
        let mut pm = template.clone();
        pm.coeffs.c20 = c2;
        pm.coeffs.c02 = c2;
        pm
    };
    let width_error = |log_c2: f64| -> Result<f64> {
        let (_, w, _) = leading_mode_width(pump, &with_c2(10f64.powf(log_c2)), grid, max_modes)?;
        Ok(w - target_nm)
    };
    let log_c2 = bisect(width_error, c2_range.0.log10(), c2_range.1.log10(), 1e-4, 60)?;
    let phase_match = with_c2(10f64.powf(log_c2));
    let (schmidt, width_nm, hg0_overlap) = leading_mode_width(pump, &phase_match, grid, max_modes)?;
    Ok(MismatchFit {
        phase_match,
        schmidt,
        width_nm,
        hg0_overlap,
    })
}
