use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::CMatrix;
use crate::modes::{wavelength_to_angular, SPEED_OF_LIGHT_NM_PER_PS};

/// Spectral shape of the pump.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum PumpShape {
    /// Intensity `exp(-(ω-ωp)²/σ²)`.
    Gaussian,
    /// Intensity `sech²((ω-ωp)/T)`.
    Sech2,
    /// Real amplitude sampled at increasing pump wavelengths (nm), linearly
    /// interpolated and zero outside the table. `bandwidth` is ignored.
    Tabulated { wavelengths_nm: Vec<f64>, amplitude: Vec<f64> },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PumpEnvelope {
    pub center_nm: f64,
    /// Intensity FWHM in nm.
    pub bandwidth_nm: f64,
    #[serde(flatten)]
    pub shape: PumpShape,
}

impl PumpEnvelope {
    pub fn gaussian(center_nm: f64, bandwidth_nm: f64) -> Self {
        Self {
            center_nm,
            bandwidth_nm,
            shape: PumpShape::Gaussian,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.center_nm > 0.0) {
            return Err(Error::OutOfRange(format!("pump center {} nm", self.center_nm)));
        }
        match &self.shape {
            PumpShape::Tabulated {
                wavelengths_nm,
                amplitude,
            } => {
                if wavelengths_nm.len() != amplitude.len() || wavelengths_nm.len() < 2 {
                    return Err(Error::OutOfRange("tabulated pump needs ≥ 2 matching samples".into()));
                }
                if wavelengths_nm.windows(2).any(|w| w[1] <= w[0]) {
                    return Err(Error::OutOfRange("tabulated pump wavelengths must increase".into()));
                }
            }
            _ => {
                if !(self.bandwidth_nm > 0.0) {
                    return Err(Error::OutOfRange(format!(
                        "pump bandwidth must be positive, got {}",
                        self.bandwidth_nm
                    )));
                }
            }
        }
        Ok(())
    }

    pub fn center_angular(&self) -> f64 {
        wavelength_to_angular(self.center_nm)
    }

    /// Intensity FWHM converted to rad/ps at the pump center.
    pub fn bandwidth_angular(&self) -> f64 {
        2.0 * std::f64::consts::PI * SPEED_OF_LIGHT_NM_PER_PS * self.bandwidth_nm / (self.center_nm * self.center_nm)
    }

    /// Amplitude at angular frequency `omega` (rad/ps); unity at the center.
    pub fn amplitude(&self, omega: f64) -> f64 {
        let d = omega - self.center_angular();
        match &self.shape {
            PumpShape::Gaussian => {
                let sigma = self.bandwidth_angular() / (2.0 * std::f64::consts::LN_2.sqrt());
                (-d * d / (2.0 * sigma * sigma)).exp()
            }
            PumpShape::Sech2 => {
                let t = self.bandwidth_angular() / (2.0 * std::f64::consts::SQRT_2.acosh());
                1.0 / (d / t).cosh()
            }
            PumpShape::Tabulated {
                wavelengths_nm,
                amplitude,
            } => {
                let nm = 2.0 * std::f64::consts::PI * SPEED_OF_LIGHT_NM_PER_PS / omega;
                interpolate(wavelengths_nm, amplitude, nm)
            }
        }
    }
}

fn interpolate(xs: &[f64], ys: &[f64], x: f64) -> f64 {
    if x < xs[0] || x > xs[xs.len() - 1] {
        return 0.0;
    }
    let i = xs.partition_point(|&v| v <= x).clamp(1, xs.len() - 1);
    let (x0, x1) = (xs[i - 1], xs[i]);
    ys[i - 1] + (ys[i] - ys[i - 1]) * (x - x0) / (x1 - x0)
}

/// Coefficients of the phase mismatch (mm⁻¹) as a polynomial in the signal
/// and idler detunings Ωs, Ωi (rad/ps) from half the pump center frequency:
/// `Δk = c10 Ωs + c01 Ωi + c20 Ωs² + c02 Ωi² + c11 Ωs Ωi`.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct MismatchCoefficients {
    #[serde(default)]
    pub c10: f64,
    #[serde(default)]
    pub c01: f64,
    #[serde(default)]
    pub c20: f64,
    #[serde(default)]
    pub c02: f64,
    #[serde(default)]
    pub c11: f64,
}

impl MismatchCoefficients {
    pub fn delta_k(&self, ds: f64, di: f64) -> f64 {
        self.c10 * ds + self.c01 * di + self.c20 * ds * ds + self.c02 * di * di + self.c11 * ds * di
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum PhaseMatchKind {
    /// `sinc(Δk L / 2)`.
    SincPolynomial,
    /// Values on the (signal, idler) sample grid, used as given.
    Tabulated(CMatrix),
}

#[derive(Clone, Debug, PartialEq)]
pub struct PhaseMatchModel {
    pub kind: PhaseMatchKind,
    pub length_mm: f64,
    pub coeffs: MismatchCoefficients,
}

impl PhaseMatchModel {
    pub fn sinc(length_mm: f64, coeffs: MismatchCoefficients) -> Self {
        Self {
            kind: PhaseMatchKind::SincPolynomial,
            length_mm,
            coeffs,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.length_mm > 0.0) {
            return Err(Error::OutOfRange(format!(
                "crystal length must be positive, got {} mm",
                self.length_mm
            )));
        }
        Ok(())
    }
}

pub(crate) fn sinc(x: f64) -> f64 {
    if x.abs() < 1e-8 {
        1.0 - x * x / 6.0
    } else {
        x.sin() / x
    }
}
