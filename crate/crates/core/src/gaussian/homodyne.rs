use num_complex::Complex64 as C64;
use serde::Serialize;

use super::CovarianceMatrix;
use crate::error::{Error, Result};
use crate::modes::{ModeBasis, SpectralMode};

/// LO overlaps below this norm count as "orthogonal to the basis".
pub const TOL_LO_OVERLAP: f64 = 1e-12;

/// Quadratic form of a homodyne measurement as a function of the LO phase:
/// `Var(φ) = mean + a cos 2φ + b sin 2φ`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct HomodyneForm {
    pub mean: f64,
    pub cos2: f64,
    pub sin2: f64,
    /// Part of the LO outside the basis, detected as vacuum.
    pub residual: f64,
    /// LO has no overlap with the basis; the form is pure shot noise.
    pub orthogonal: bool,
}

impl HomodyneForm {
    pub fn variance(&self, phase: f64) -> f64 {
        self.mean + self.cos2 * (2.0 * phase).cos() + self.sin2 * (2.0 * phase).sin()
    }

    fn amplitude(&self) -> f64 {
        self.cos2.hypot(self.sin2)
    }

    pub fn min_variance(&self) -> f64 {
        self.mean - self.amplitude()
    }

    pub fn max_variance(&self) -> f64 {
        self.mean + self.amplitude()
    }

    /// Phase (in [0, π)) of the minimum.
    pub fn min_phase(&self) -> f64 {
        let p = 0.5 * (self.sin2.atan2(self.cos2) + std::f64::consts::PI);
        p.rem_euclid(std::f64::consts::PI)
    }
}

/// Result of a single homodyne evaluation.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct HomodyneVariance {
    pub variance: f64,
    pub residual: f64,
    pub orthogonal: bool,
}

/// Quadratic form for `lo` measured on a state whose modes are `basis`.
///
/// With `c_k = <lo, s_k>` and `d = c e^{-iφ} = a + ib`, the detected
/// quadrature is `Σ a_k x_k - b_k p_k`; the LO norm not captured by the
/// basis adds `ε/2` of vacuum noise.
pub fn homodyne_form(cm: &CovarianceMatrix, basis: &ModeBasis, lo: &SpectralMode) -> Result<HomodyneForm> {
    let n = cm.n_modes();
    if basis.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            found: basis.len(),
        });
    }
    if !basis.is_orthonormal() {
        return Err(Error::InvalidMode("homodyne projection needs an orthonormal mode basis".into()));
    }
    if !lo.grid().same_as(basis.grid()) {
        return Err(Error::InvalidMode("LO and basis live on different grids".into()));
    }
    let c: Vec<C64> = basis.project(lo).iter().map(|z| z.conj()).collect();
    let captured: f64 = c.iter().map(|z| z.norm_sqr()).sum();
    let residual = (lo.norm_sqr() - captured).max(0.0);
    if captured.sqrt() < TOL_LO_OVERLAP {
        return Ok(HomodyneForm {
            mean: 0.5 * lo.norm_sqr(),
            cos2: 0.0,
            sin2: 0.0,
            residual,
            orthogonal: true,
        });
    }
    // v(φ) = cos φ u + sin φ w with u = (Re c, -Im c), w = (Im c, Re c)
    let mut u = vec![0.0; 2 * n];
    let mut w = vec![0.0; 2 * n];
    for (k, z) in c.iter().enumerate() {
        u[k] = z.re;
        u[n + k] = -z.im;
        w[k] = z.im;
        w[n + k] = z.re;
    }
    let g = cm.matrix();
    let quad = |a: &[f64], b: &[f64]| -> f64 {
        let mut acc = 0.0;
        for r in 0..2 * n {
            if a[r] == 0.0 {
                continue;
            }
            let mut row = 0.0;
            for s in 0..2 * n {
                row += g[(r, s)] * b[s];
            }
            acc += a[r] * row;
        }
        acc
    };
    let (guu, gww, guw) = (quad(&u, &u), quad(&w, &w), quad(&u, &w));
    Ok(HomodyneForm {
        mean: 0.5 * (guu + gww) + 0.5 * residual,
        cos2: 0.5 * (guu - gww),
        sin2: guw,
        residual,
        orthogonal: false,
    })
}

/// Variance of the homodyne signal at LO phase `phase`; `φ = 0` reads x,
/// `φ = π/2` reads p of a mode that coincides with the LO.
pub fn homodyne_variance(
    cm: &CovarianceMatrix,
    basis: &ModeBasis,
    lo: &SpectralMode,
    phase: f64,
) -> Result<HomodyneVariance> {
    let f = homodyne_form(cm, basis, lo)?;
    Ok(HomodyneVariance {
        variance: f.variance(phase),
        residual: f.residual,
        orthogonal: f.orthogonal,
    })
}
