use std::io::Write;

use num_complex::Complex64 as C64;
use rayon::prelude::*;

use super::source::{sinc, PhaseMatchKind, PhaseMatchModel, PumpEnvelope};
use crate::error::{Error, Result};
use crate::linalg::CMatrix;
use crate::modes::{angular_jacobian, FrequencyGrid};

/// Joint spectral amplitude sampled on (signal, idler) wavelength grids.
///
/// Values are densities in wavelength: the norm is the quadrature
/// `Σ_ij w_i w_j |J_ij|²`, the same measure used for spectral modes.
#[derive(Clone, Debug)]
pub struct JsaGrid {
    grid_s: FrequencyGrid,
    grid_i: FrequencyGrid,
    values: CMatrix,
}

impl JsaGrid {
    /// Wrap tabulated values (rows: signal samples) and normalize.
    pub fn from_values(grid_s: &FrequencyGrid, grid_i: &FrequencyGrid, values: CMatrix) -> Result<Self> {
        if values.nrows() != grid_s.len() || values.ncols() != grid_i.len() {
            return Err(Error::DimensionMismatch {
                expected: grid_s.len() * grid_i.len(),
                found: values.len(),
            });
        }
        let mut jsa = Self {
            grid_s: grid_s.clone(),
            grid_i: grid_i.clone(),
            values,
        };
        let norm = jsa.norm();
        if !(norm > 0.0) || !norm.is_finite() {
            return Err(Error::EmptyOverlap);
        }
        jsa.values /= C64::new(norm, 0.0);
        Ok(jsa)
    }

    /// Sample `f(λs, λi)` (nm) on the grids, then normalize.
    pub fn from_fn<F>(grid_s: &FrequencyGrid, grid_i: &FrequencyGrid, f: F) -> Result<Self>
    where
        F: Fn(f64, f64) -> C64 + Sync,
    {
        let rows: Vec<Vec<C64>> = grid_s
            .points()
            .par_iter()
            .map(|&ls| grid_i.points().iter().map(|&li| f(ls, li)).collect())
            .collect();
        let values = CMatrix::from_fn(grid_s.len(), grid_i.len(), |r, c| rows[r][c]);
        Self::from_values(grid_s, grid_i, values)
    }

    pub fn grid_s(&self) -> &FrequencyGrid {
        &self.grid_s
    }

    pub fn grid_i(&self) -> &FrequencyGrid {
        &self.grid_i
    }

    pub fn values(&self) -> &CMatrix {
        &self.values
    }

    pub fn norm(&self) -> f64 {
        let (ws, wi) = (self.grid_s.weights(), self.grid_i.weights());
        let mut acc = 0.0;
        for c in 0..self.values.ncols() {
            for r in 0..self.values.nrows() {
                acc += ws[r] * wi[c] * self.values[(r, c)].norm_sqr();
            }
        }
        acc.sqrt()
    }

    /// Largest |J(s,i) - J(i,s)| relative to max |J|; requires equal grids.
    pub fn asymmetry(&self) -> Option<f64> {
        if !self.grid_s.same_as(&self.grid_i) {
            return None;
        }
        let peak = self.values.iter().map(|v| v.norm()).fold(0.0, f64::max);
        let mut worst: f64 = 0.0;
        for r in 0..self.values.nrows() {
            for c in (r + 1)..self.values.ncols() {
                worst = worst.max((self.values[(r, c)] - self.values[(c, r)]).norm());
            }
        }
        Some(worst / peak)
    }

    /// Magnitude and phase matrices as CSV: first row holds the idler
    /// wavelengths, first column the signal wavelengths.
    pub fn write_csv<W: Write>(&self, magnitude: W, phase: W) -> Result<()> {
        self.write_component(magnitude, |z| z.norm())?;
        self.write_component(phase, |z| z.arg())
    }

    fn write_component<W: Write>(&self, out: W, f: impl Fn(C64) -> f64) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        let mut head = vec!["signal_nm\\idler_nm".to_string()];
        head.extend(self.grid_i.points().iter().map(|p| p.to_string()));
        w.write_record(&head)?;
        for (r, ls) in self.grid_s.points().iter().enumerate() {
            let mut row = vec![ls.to_string()];
            row.extend((0..self.values.ncols()).map(|c| f(self.values[(r, c)]).to_string()));
            w.write_record(&row)?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Pump envelope at the sum frequency times the phase-matching function.
///
/// Detunings in the mismatch polynomial are taken from half the pump center
/// frequency. The values include `sqrt(|dω/dλ|_s |dω/dλ|_i)` so that the
/// wavelength-domain decomposition has the same Schmidt coefficients as the
/// frequency-domain one. Rows are evaluated in parallel; each row sums in a
/// fixed order so the result does not depend on scheduling.
pub fn build_jsa(
    pump: &PumpEnvelope,
    pm: &PhaseMatchModel,
    grid_s: &FrequencyGrid,
    grid_i: &FrequencyGrid,
) -> Result<JsaGrid> {
    pump.validate()?;
    pm.validate()?;
    if let PhaseMatchKind::Tabulated(t) = &pm.kind {
        if t.nrows() != grid_s.len() || t.ncols() != grid_i.len() {
            return Err(Error::DimensionMismatch {
                expected: grid_s.len() * grid_i.len(),
                found: t.len(),
            });
        }
    }
    let half = 0.5 * pump.center_angular();
    let ws = grid_s.angular_frequencies();
    let wi = grid_i.angular_frequencies();
    let js: Vec<f64> = grid_s.points().iter().map(|&l| angular_jacobian(l).sqrt()).collect();
    let ji: Vec<f64> = grid_i.points().iter().map(|&l| angular_jacobian(l).sqrt()).collect();

    let rows: Vec<Vec<C64>> = (0..ws.len())
        .into_par_iter()
        .map(|r| {
            (0..wi.len())
                .map(|c| {
                    let alpha = pump.amplitude(ws[r] + wi[c]);
                    let phi = match &pm.kind {
                        PhaseMatchKind::SincPolynomial => {
                            let dk = pm.coeffs.delta_k(ws[r] - half, wi[c] - half);
                            C64::new(sinc(0.5 * dk * pm.length_mm), 0.0)
                        }
                        PhaseMatchKind::Tabulated(t) => t[(r, c)],
                    };
                    phi * (alpha * js[r] * ji[c])
                })
                .collect()
        })
        .collect();
    let values = CMatrix::from_fn(ws.len(), wi.len(), |r, c| rows[r][c]);
    JsaGrid::from_values(grid_s, grid_i, values)
}
