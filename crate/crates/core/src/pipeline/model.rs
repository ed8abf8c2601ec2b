use serde::Serialize;

use super::config::{ExperimentConfig, PumpShapeName};
use crate::calib::total_efficiency;
use crate::error::{Error, Result};
use crate::gaussian::{
    apply_uniform_loss, change_basis, homodyne_form, BasisChange, CovarianceMatrix, HomodyneForm,
};
use crate::modes::{
    apply_clipping, fit_clipping_window, flat_basis, frexel_basis, hermite_gauss_basis, ClippingWindow,
    FrequencyGrid, ModeBasis, SpectralMode, WindowFit, CLIPPED_HG_SINGULAR_VALUES,
};
use crate::spdc::{
    fit_quadratic_mismatch, leading_mode_width, pump_scale_for_db, squeezing_spectrum,
    MismatchCoefficients, PhaseMatchModel, PumpEnvelope, PumpShape, SchmidtDecomposition, SqueezingSpectrum,
};

/// Simulated source: supermodes, squeezing and the detected (lossy) state in
/// the supermode basis.
#[derive(Clone, Debug)]
pub struct SourceModel {
    pub grid: FrequencyGrid,
    pub pump: PumpEnvelope,
    pub phase_match: PhaseMatchModel,
    pub schmidt: SchmidtDecomposition,
    pub supermodes: ModeBasis,
    pub spectrum: SqueezingSpectrum,
    pub eta: f64,
    /// Full 1/e width of the leading supermode's HG0 fit.
    pub leading_width_nm: f64,
    pub leading_hg0_overlap: f64,
    /// Detected state (after efficiency `eta`) in the supermode basis.
    pub detected: CovarianceMatrix,
}

/// Headline numbers of a [`SourceModel`].
#[derive(Clone, Debug, Serialize)]
pub struct SourceSummary {
    pub c20: f64,
    pub c02: f64,
    pub schmidt_number: f64,
    pub n_supermodes: usize,
    pub truncated_mass: f64,
    pub reconstruction_error: f64,
    pub pump_scale: f64,
    pub eta: f64,
    pub leading_width_nm: f64,
    pub leading_hg0_overlap: f64,
    pub r: Vec<f64>,
}

fn pump_from(cfg: &ExperimentConfig) -> PumpEnvelope {
    PumpEnvelope {
        center_nm: cfg.pump.center_nm,
        bandwidth_nm: cfg.pump.bandwidth_nm,
        shape: match cfg.pump.shape {
            PumpShapeName::Gaussian => PumpShape::Gaussian,
            PumpShapeName::Sech2 => PumpShape::Sech2,
        },
    }
}

/// Detection efficiency from the loss section.
pub fn detection_efficiency(cfg: &ExperimentConfig) -> Result<f64> {
    match cfg.loss.eta {
        Some(eta) => Ok(eta),
        None => total_efficiency(&cfg.loss.budget()?),
    }
}

pub fn build_grid(cfg: &ExperimentConfig) -> Result<FrequencyGrid> {
    FrequencyGrid::centered(cfg.grid.center_nm, cfg.grid.half_span_nm, cfg.grid.resolution_nm)
}

impl SourceModel {
    pub fn build(cfg: &ExperimentConfig) -> Result<Self> {
        let grid = build_grid(cfg)?;
        let pump = pump_from(cfg);
        pump.validate()?;
        let pm_cfg = &cfg.phasematch;
        let template = PhaseMatchModel::sinc(
            pm_cfg.length_mm,
            MismatchCoefficients {
                c10: pm_cfg.c10,
                c01: pm_cfg.c01,
                c20: pm_cfg.c20.unwrap_or(0.0),
                c02: pm_cfg.c02.unwrap_or(0.0),
                c11: pm_cfg.c11,
            },
        );
        let max_modes = cfg.schmidt.max_modes;
        let (phase_match, schmidt, leading_width_nm, leading_hg0_overlap) = if pm_cfg.c20.is_some() {
            let (schmidt, w, ov) = leading_mode_width(&pump, &template, &grid, max_modes)?;
            (template, schmidt, w, ov)
        } else {
            let fit = fit_quadratic_mismatch(
                &pump,
                &template,
                &grid,
                pm_cfg.fit_width_nm,
                (pm_cfg.c2_search[0], pm_cfg.c2_search[1]),
                max_modes,
            )?;
            (fit.phase_match, fit.schmidt, fit.width_nm, fit.hg0_overlap)
        };
        let supermodes = schmidt.supermodes()?;
        let eta = detection_efficiency(cfg)?;
        let g = match cfg.pump_scale.g {
            Some(g) => g,
            None => pump_scale_for_db(schmidt.coefficients(), cfg.pump_scale.target_db, eta)?,
        };
        let spectrum = squeezing_spectrum(schmidt.coefficients(), g)?;
        let detected = apply_uniform_loss(&CovarianceMatrix::squeezed_vacuum(&spectrum), eta)?;
        Ok(Self {
            grid,
            pump,
            phase_match,
            schmidt,
            supermodes,
            spectrum,
            eta,
            leading_width_nm,
            leading_hg0_overlap,
            detected,
        })
    }

    pub fn summary(&self) -> SourceSummary {
        SourceSummary {
            c20: self.phase_match.coeffs.c20,
            c02: self.phase_match.coeffs.c02,
            schmidt_number: self.schmidt.schmidt_number(),
            n_supermodes: self.schmidt.len(),
            truncated_mass: self.schmidt.truncated_mass(),
            reconstruction_error: self.schmidt.reconstruction_error(),
            pump_scale: self.spectrum.pump_scale,
            eta: self.eta,
            leading_width_nm: self.leading_width_nm,
            leading_hg0_overlap: self.leading_hg0_overlap,
            r: self.spectrum.r.clone(),
        }
    }

    /// HG basis about the grid center; width from the config or the fitted
    /// leading supermode.
    pub fn hg_basis(&self, cfg: &ExperimentConfig, count: usize) -> Result<ModeBasis> {
        let width = cfg.basis.hg_width_nm.unwrap_or(self.leading_width_nm);
        hermite_gauss_basis(&self.grid, self.grid.center(), width, count)
    }

    pub fn flat_basis(&self, cfg: &ExperimentConfig) -> Result<ModeBasis> {
        flat_basis(&self.hg_basis(cfg, cfg.basis.flat_modes.max(1))?, cfg.basis.flat_modes)
    }

    pub fn frexel_basis(&self, cfg: &ExperimentConfig) -> Result<ModeBasis> {
        let f = &cfg.basis.frexel;
        frexel_basis(&self.grid, (f.span_lo_nm, f.span_hi_nm), f.bands)
    }

    /// Homodyne form for an arbitrary LO on the detected state.
    pub fn homodyne(&self, lo: &SpectralMode) -> Result<HomodyneForm> {
        homodyne_form(&self.detected, &self.supermodes, lo)
    }

    /// Detected state projected on `basis`; modes outside the supermode span
    /// are filled with vacuum.
    pub fn project(&self, basis: &ModeBasis) -> Result<CovarianceMatrix> {
        change_basis(&self.detected, &BasisChange::between(basis, &self.supermodes)?)
    }
}

/// Clipping window from the config: fixed, or fitted to the reference
/// singular values on an HG basis of matching size.
pub fn clipping_window(cfg: &ExperimentConfig, hg: &ModeBasis) -> Result<(ClippingWindow, Option<WindowFit>)> {
    let c = &cfg.clipping;
    if c.fit {
        let n = CLIPPED_HG_SINGULAR_VALUES.len();
        if hg.len() < n {
            return Err(Error::Config(format!("fitting the clipping window needs {n} HG modes")));
        }
        let fit = fit_clipping_window(&hg.truncated(n)?, &CLIPPED_HG_SINGULAR_VALUES, c.threshold)?;
        Ok((fit.window, Some(fit)))
    } else {
        let (lo, hi) = (
            c.lo_nm.ok_or_else(|| Error::Config("clipping.lo_nm missing".into()))?,
            c.hi_nm.ok_or_else(|| Error::Config("clipping.hi_nm missing".into()))?,
        );
        Ok((ClippingWindow::new(hg.grid(), lo, hi)?, None))
    }
}

/// LO shapes of `basis`, clipped and renormalized when clipping is enabled.
pub fn local_oscillators(basis: &ModeBasis, window: Option<&ClippingWindow>) -> Result<Vec<SpectralMode>> {
    match window {
        None => Ok(basis.modes().to_vec()),
        Some(w) => Ok(apply_clipping(basis, w, true)?.modes().to_vec()),
    }
}
