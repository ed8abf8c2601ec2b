//! Spectral mode bases: Hermite-Gauss, flat and frexel families, clipping
//! windows and linear-independence analysis of clipped sets.
//!
//! All inner products are trapezoidal quadratures over the wavelength axis of
//! a [`FrequencyGrid`]:
//!
//! ```text
//! <a, b> = sum_i w_i conj(a_i) b_i
//! ```

mod clipping;
mod flat;
mod frexel;
mod grid;
mod hermite;
pub mod io;

use std::collections::BTreeMap;

use num_complex::Complex64 as C64;

use crate::error::{Error, Result};
use crate::linalg::CMatrix;

pub use clipping::{
    apply_clipping, fit_clipping_window, rank_analysis, ClippingWindow, RankReport, WindowFit,
    CLIPPED_HG_SINGULAR_VALUES,
};
pub use flat::flat_basis;
pub use frexel::frexel_basis;
pub use grid::{angular_jacobian, wavelength_to_angular, FrequencyGrid, SPEED_OF_LIGHT_NM_PER_PS};
pub use hermite::{
    fit_hg0_width, hermite_function, hermite_gauss_basis, hermite_gauss_mode, EDGE_AMPLITUDE_LIMIT,
};

/// Default tolerance on off-diagonal Gram entries of orthonormal bases.
pub const TOL_ORTH: f64 = 1e-10;

/// Tolerance on the norm of a normalized mode.
pub const TOL_NORM: f64 = 1e-12;

/// Complex amplitude sampled on a grid.
///
/// Modes built by the basis constructors have unit norm; modes carried by a
/// basis clipped without renormalization are the only exception.
#[derive(Clone, Debug)]
pub struct SpectralMode {
    grid: FrequencyGrid,
    amplitude: Vec<C64>,
}

impl SpectralMode {
    /// Normalize `amplitude` to unit norm.
    pub fn normalized(grid: &FrequencyGrid, amplitude: Vec<C64>) -> Result<Self> {
        let mut mode = Self::unnormalized(grid, amplitude)?;
        let norm = mode.norm();
        if !(norm > 0.0) || !norm.is_finite() {
            return Err(Error::InvalidMode(format!("cannot normalize mode with norm {norm}")));
        }
        mode.amplitude.iter_mut().for_each(|a| *a /= norm);
        Ok(mode)
    }

    pub fn from_real(grid: &FrequencyGrid, amplitude: &[f64]) -> Result<Self> {
        Self::normalized(grid, amplitude.iter().map(|&a| C64::new(a, 0.0)).collect())
    }

    /// Keep `amplitude` as given (no normalization).
    pub fn unnormalized(grid: &FrequencyGrid, amplitude: Vec<C64>) -> Result<Self> {
        if amplitude.len() != grid.len() {
            return Err(Error::DimensionMismatch {
                expected: grid.len(),
                found: amplitude.len(),
            });
        }
        Ok(Self {
            grid: grid.clone(),
            amplitude,
        })
    }

    pub fn grid(&self) -> &FrequencyGrid {
        &self.grid
    }

    pub fn amplitude(&self) -> &[C64] {
        &self.amplitude
    }

    pub fn len(&self) -> usize {
        self.amplitude.len()
    }

    pub fn is_empty(&self) -> bool {
        self.amplitude.is_empty()
    }

    /// `<self, other>`, antilinear in `self`.
    pub fn inner(&self, other: &SpectralMode) -> C64 {
        debug_assert_eq!(self.len(), other.len());
        self.grid
            .weights()
            .iter()
            .zip(self.amplitude.iter().zip(&other.amplitude))
            .map(|(&w, (a, b))| a.conj() * b * w)
            .sum()
    }

    pub fn norm_sqr(&self) -> f64 {
        self.grid
            .weights()
            .iter()
            .zip(&self.amplitude)
            .map(|(&w, a)| a.norm_sqr() * w)
            .sum()
    }

    pub fn norm(&self) -> f64 {
        self.norm_sqr().sqrt()
    }

    /// Multiply by a complex scalar.
    pub fn scaled(&self, factor: C64) -> SpectralMode {
        SpectralMode {
            grid: self.grid.clone(),
            amplitude: self.amplitude.iter().map(|a| a * factor).collect(),
        }
    }

    /// Number of sign changes of the real part, ignoring samples below
    /// `rel_floor` times the peak magnitude.
    pub fn sign_changes(&self, rel_floor: f64) -> usize {
        let peak = self.amplitude.iter().map(|a| a.re.abs()).fold(0.0, f64::max);
        let floor = peak * rel_floor;
        let mut last = 0.0f64;
        let mut changes = 0;
        for a in &self.amplitude {
            if a.re.abs() <= floor {
                continue;
            }
            if last != 0.0 && a.re.signum() != last {
                changes += 1;
            }
            last = a.re.signum();
        }
        changes
    }

    /// Linear combination `sum_k coeffs[k] * modes[k]`, normalized.
    pub fn combination(modes: &[&SpectralMode], coeffs: &[C64]) -> Result<SpectralMode> {
        let first = modes
            .first()
            .ok_or_else(|| Error::InvalidMode("empty combination".into()))?;
        if modes.len() != coeffs.len() {
            return Err(Error::DimensionMismatch {
                expected: modes.len(),
                found: coeffs.len(),
            });
        }
        let mut amp = vec![C64::new(0.0, 0.0); first.len()];
        for (m, &c) in modes.iter().zip(coeffs) {
            for (acc, a) in amp.iter_mut().zip(&m.amplitude) {
                *acc += c * a;
            }
        }
        SpectralMode::normalized(&first.grid, amp)
    }
}

/// Whether a basis is guaranteed orthonormal.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Orthogonality {
    Orthonormal,
    NonOrthogonal,
}

/// Ordered list of modes on a shared grid.
#[derive(Clone, Debug)]
pub struct ModeBasis {
    label: String,
    grid: FrequencyGrid,
    modes: Vec<SpectralMode>,
    orthogonality: Orthogonality,
    conventions: BTreeMap<String, f64>,
    warnings: Vec<String>,
    dropped: Vec<usize>,
}

impl ModeBasis {
    /// Build a basis that is checked to be orthonormal within [`TOL_ORTH`].
    pub fn orthonormal(label: impl Into<String>, modes: Vec<SpectralMode>) -> Result<Self> {
        let basis = Self::build(label.into(), modes, Orthogonality::Orthonormal)?;
        let deviation = basis.orthonormality_deviation();
        if deviation > TOL_ORTH {
            return Err(Error::NotOrthonormal { deviation });
        }
        Ok(basis)
    }

    /// Build a basis without any orthogonality guarantee.
    pub fn non_orthogonal(label: impl Into<String>, modes: Vec<SpectralMode>) -> Result<Self> {
        Self::build(label.into(), modes, Orthogonality::NonOrthogonal)
    }

    fn build(label: String, modes: Vec<SpectralMode>, orthogonality: Orthogonality) -> Result<Self> {
        let grid = modes
            .first()
            .map(|m| m.grid.clone())
            .ok_or_else(|| Error::InvalidMode("basis needs at least one mode".into()))?;
        if let Some(bad) = modes.iter().find(|m| !m.grid.same_as(&grid)) {
            return Err(Error::InvalidMode(format!(
                "mode on a different grid ({} points vs {})",
                bad.len(),
                grid.len()
            )));
        }
        Ok(Self {
            label,
            grid,
            modes,
            orthogonality,
            conventions: BTreeMap::new(),
            warnings: Vec::new(),
            dropped: Vec::new(),
        })
    }

    pub fn with_convention(mut self, key: impl Into<String>, value: f64) -> Self {
        self.conventions.insert(key.into(), value);
        self
    }

    pub(crate) fn with_warning(mut self, warning: impl Into<String>) -> Self {
        self.warnings.push(warning.into());
        self
    }

    pub(crate) fn with_dropped(mut self, dropped: Vec<usize>) -> Self {
        self.dropped = dropped;
        self
    }

    pub(crate) fn with_conventions(mut self, conventions: BTreeMap<String, f64>) -> Self {
        self.conventions = conventions;
        self
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn grid(&self) -> &FrequencyGrid {
        &self.grid
    }

    pub fn modes(&self) -> &[SpectralMode] {
        &self.modes
    }

    pub fn mode(&self, index: usize) -> &SpectralMode {
        &self.modes[index]
    }

    pub fn len(&self) -> usize {
        self.modes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.modes.is_empty()
    }

    pub fn orthogonality(&self) -> Orthogonality {
        self.orthogonality
    }

    pub fn is_orthonormal(&self) -> bool {
        self.orthogonality == Orthogonality::Orthonormal
    }

    /// Named convention constants (e.g. `center_nm`, `width_hg0_nm`).
    pub fn conventions(&self) -> &BTreeMap<String, f64> {
        &self.conventions
    }

    pub fn convention(&self, key: &str) -> Option<f64> {
        self.conventions.get(key).copied()
    }

    pub fn warnings(&self) -> &[String] {
        &self.warnings
    }

    /// Indices (in the source basis) of modes dropped by clipping.
    pub fn dropped(&self) -> &[usize] {
        &self.dropped
    }

    /// First `count` modes as a new basis.
    pub fn truncated(&self, count: usize) -> Result<ModeBasis> {
        if count == 0 || count > self.len() {
            return Err(Error::OutOfRange(format!(
                "cannot keep {count} of {} modes",
                self.len()
            )));
        }
        let mut out = self.clone();
        out.modes.truncate(count);
        Ok(out)
    }

    /// Gram matrix `G[i][j] = <m_i, m_j>`.
    pub fn gram(&self) -> CMatrix {
        let n = self.len();
        let mut g = CMatrix::zeros(n, n);
        for i in 0..n {
            for j in i..n {
                let v = self.modes[i].inner(&self.modes[j]);
                g[(i, j)] = v;
                g[(j, i)] = v.conj();
            }
        }
        g
    }

    /// Largest entry of |G - I|.
    pub fn orthonormality_deviation(&self) -> f64 {
        crate::linalg::max_abs_deviation_from_identity(&self.gram())
    }

    /// Coefficients `<m_k, f>` of `f` on every basis mode.
    pub fn project(&self, f: &SpectralMode) -> Vec<C64> {
        self.modes.iter().map(|m| m.inner(f)).collect()
    }
}
