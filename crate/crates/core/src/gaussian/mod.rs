//! Covariance matrices, passive transformations, homodyne detection and
//! phase-scan traces.

mod covariance;
mod homodyne;
mod trace;
mod transform;

pub use covariance::{physicality_margin, symplectic_form, CovarianceMatrix, CovarianceUnits};
pub use homodyne::{homodyne_form, homodyne_variance, HomodyneForm, HomodyneVariance};
pub use trace::{
    extract_extrema, form_extrema_db, savgol_filter, synth_from_form, synth_phase_trace, ExtremaReport,
    NoiseConfig, PhaseScanTrace, SavGolConfig, ScanConfig, MAX_EXTREMA,
};
pub use transform::{apply_loss, apply_uniform_loss, beam_splitter, change_basis, BasisChange, BasisChangeKind};

use crate::error::{Error, Result};

/// Vacuum (shot-noise) quadrature variance.
pub const VACUUM_VARIANCE: f64 = 0.5;

/// Variance relative to shot noise, in dB.
pub fn to_db(variance: f64) -> Result<f64> {
    if !(variance > 0.0) {
        return Err(Error::NonPositiveVariance(variance));
    }
    Ok(10.0 * (variance / VACUUM_VARIANCE).log10())
}

pub fn from_db(db: f64) -> f64 {
    VACUUM_VARIANCE * 10f64.powf(db / 10.0)
}
