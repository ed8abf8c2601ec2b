use num_complex::Complex64 as C64;

use super::CovarianceMatrix;
use crate::error::{Error, Result};
use crate::linalg::{max_abs_deviation_from_identity, realify, singular_values, CMatrix, RMatrix};
use crate::modes::ModeBasis;

/// Isometry tolerance on `C C†`.
pub const TOL_ISOMETRY: f64 = 1e-10;

#[derive(Clone, Debug, PartialEq)]
pub enum BasisChangeKind {
    /// `C C† = I`: every output mode lies in the span of the input modes.
    Isometry,
    /// Orthonormal outputs only partly inside the input span (`‖C‖ ≤ 1`);
    /// the missing part of each output mode is filled with vacuum.
    Contraction,
    /// Non-orthogonal output modes with Gram matrix `G`; the vacuum fill is
    /// `(G - C C†)` and the result is not a canonical covariance matrix.
    NonOrthogonal { gram: CMatrix },
}

/// Linear map from input-mode to output-mode annihilation operators,
/// `a_out = C a_in` with `C[j][k] = <f_j, s_k>`.
#[derive(Clone, Debug)]
pub struct BasisChange {
    overlap: CMatrix,
    kind: BasisChangeKind,
}

impl BasisChange {
    /// Strict isometry; fails unless `C C† = I` within [`TOL_ISOMETRY`].
    pub fn isometry(overlap: CMatrix) -> Result<Self> {
        let dev = max_abs_deviation_from_identity(&(&overlap * overlap.adjoint()));
        if dev > TOL_ISOMETRY {
            return Err(Error::NotIsometric(dev));
        }
        Ok(Self {
            overlap,
            kind: BasisChangeKind::Isometry,
        })
    }

    /// Contraction onto orthonormal outputs; fails if the largest singular
    /// value of `C` exceeds 1.
    pub fn contraction(overlap: CMatrix) -> Result<Self> {
        let top = singular_values(&overlap)?.first().copied().unwrap_or(0.0);
        if top > 1.0 + TOL_ISOMETRY {
            return Err(Error::NotIsometric(top - 1.0));
        }
        Ok(Self {
            overlap,
            kind: BasisChangeKind::Contraction,
        })
    }

    /// Overlaps of `output` modes on an orthonormal `input` basis. The kind
    /// is chosen from the data: isometry when the outputs lie in the input
    /// span, contraction for other orthonormal outputs, non-orthogonal
    /// otherwise.
    pub fn between(output: &ModeBasis, input: &ModeBasis) -> Result<Self> {
        if !input.is_orthonormal() {
            return Err(Error::InvalidMode("input basis of a basis change must be orthonormal".into()));
        }
        if !output.grid().same_as(input.grid()) {
            return Err(Error::InvalidMode("bases live on different grids".into()));
        }
        let overlap = CMatrix::from_fn(output.len(), input.len(), |j, k| output.mode(j).inner(input.mode(k)));
        if !output.is_orthonormal() {
            return Ok(Self {
                overlap,
                kind: BasisChangeKind::NonOrthogonal { gram: output.gram() },
            });
        }
        match Self::isometry(overlap.clone()) {
            Ok(bc) => Ok(bc),
            Err(_) => Self::contraction(overlap),
        }
    }

    pub fn identity(n: usize) -> Self {
        Self {
            overlap: CMatrix::identity(n, n),
            kind: BasisChangeKind::Isometry,
        }
    }

    pub fn overlap(&self) -> &CMatrix {
        &self.overlap
    }

    pub fn kind(&self) -> &BasisChangeKind {
        &self.kind
    }

    pub fn n_in(&self) -> usize {
        self.overlap.ncols()
    }

    pub fn n_out(&self) -> usize {
        self.overlap.nrows()
    }

    /// Quadrature image `[[A, -B], [B, A]]` of `C = A + iB`.
    pub fn quadrature_map(&self) -> RMatrix {
        realify(&self.overlap)
    }
}

/// `Γ_out = S Γ Sᵀ + (V - S Sᵀ)/2`, where `S` is the quadrature image of
/// the overlap and `V` the vacuum covariance of the output modes (identity
/// for orthonormal outputs). For an isometry the second term vanishes.
pub fn change_basis(cm: &CovarianceMatrix, bc: &BasisChange) -> Result<CovarianceMatrix> {
    if bc.n_in() != cm.n_modes() {
        return Err(Error::DimensionMismatch {
            expected: cm.n_modes(),
            found: bc.n_in(),
        });
    }
    let s = bc.quadrature_map();
    let mut out = &s * cm.matrix() * s.transpose();
    let m = 2 * bc.n_out();
    match &bc.kind {
        BasisChangeKind::Isometry => {}
        BasisChangeKind::Contraction => {
            out += (RMatrix::identity(m, m) - &s * s.transpose()) * 0.5;
        }
        BasisChangeKind::NonOrthogonal { gram } => {
            out += (realify(gram) - &s * s.transpose()) * 0.5;
        }
    }
    let out = (&out + out.transpose()) * 0.5;
    match bc.kind {
        BasisChangeKind::NonOrthogonal { .. } => CovarianceMatrix::unchecked(out),
        _ => CovarianceMatrix::new(out),
    }
}

/// Pure-loss channel with per-mode transmissions:
/// `Γ → E Γ E + (I - E²)/2`, `E = diag(√η) ⊕ diag(√η)`.
pub fn apply_loss(cm: &CovarianceMatrix, eta: &[f64]) -> Result<CovarianceMatrix> {
    let n = cm.n_modes();
    if eta.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            found: eta.len(),
        });
    }
    if let Some(bad) = eta.iter().find(|e| !(0.0..=1.0).contains(*e)) {
        return Err(Error::OutOfRange(format!("transmission {bad} outside [0, 1]")));
    }
    let e: Vec<f64> = eta.iter().chain(eta).map(|x| x.sqrt()).collect();
    let g = cm.matrix();
    let out = RMatrix::from_fn(2 * n, 2 * n, |r, c| {
        let v = e[r] * g[(r, c)] * e[c];
        if r == c {
            v + 0.5 * (1.0 - e[r] * e[r])
        } else {
            v
        }
    });
    CovarianceMatrix::unchecked(out)
}

/// Same transmission on every mode.
pub fn apply_uniform_loss(cm: &CovarianceMatrix, eta: f64) -> Result<CovarianceMatrix> {
    apply_loss(cm, &vec![eta; cm.n_modes()])
}

/// Passive unitary on `n` modes mixing modes `i` and `j` as a beam splitter
/// with amplitude transmission `cos θ` and phase `φ` on the reflected arm.
pub fn beam_splitter(n: usize, i: usize, j: usize, theta: f64, phi: f64) -> CMatrix {
    let mut u = CMatrix::identity(n, n);
    let (c, s) = (theta.cos(), theta.sin());
    let e = C64::from_polar(1.0, phi);
    u[(i, i)] = C64::new(c, 0.0);
    u[(i, j)] = -e.conj() * s;
    u[(j, i)] = e * s;
    u[(j, j)] = C64::new(c, 0.0);
    u
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identity_is_noop() {
        let s = CovarianceMatrix::squeezed_vacuum_r(&[0.3, 0.7]);
        let out = change_basis(&s, &BasisChange::identity(2)).unwrap();
        assert!((out.matrix() - s.matrix()).amax() < 1e-15);
    }

    #[test]
    fn balanced_mixing_of_equal_squeezers_is_invariant() {
        let s = CovarianceMatrix::squeezed_vacuum_r(&[0.5, 0.5]);
        let bc = BasisChange::isometry(beam_splitter(2, 0, 1, std::f64::consts::FRAC_PI_4, 0.0)).unwrap();
        let out = change_basis(&s, &bc).unwrap();
        assert!((out.matrix() - s.matrix()).amax() < 1e-14);
    }

    #[test]
    fn non_unitary_rejected() {
        let c = CMatrix::from_element(1, 1, C64::new(0.5, 0.0));
        assert!(BasisChange::isometry(c.clone()).is_err());
        assert!(BasisChange::contraction(c).is_ok());
        assert!(BasisChange::contraction(CMatrix::from_element(1, 1, C64::new(1.5, 0.0))).is_err());
    }

    #[test]
    fn contraction_equals_loss() {
        let s = CovarianceMatrix::squeezed_vacuum_r(&[0.8]);
        let bc = BasisChange::contraction(CMatrix::from_element(1, 1, C64::new(0.6, 0.0))).unwrap();
        let a = change_basis(&s, &bc).unwrap();
        let b = apply_uniform_loss(&s, 0.36).unwrap();
        assert!((a.matrix() - b.matrix()).amax() < 1e-14);
    }

    #[test]
    fn loss_closed_form() {
        let r = -0.5 * 0.1f64.ln();
        let s = CovarianceMatrix::squeezed_vacuum_r(&[r]);
        let l = apply_uniform_loss(&s, 0.5).unwrap();
        assert!((l.matrix()[(1, 1)] - 0.275).abs() < 1e-14);
        assert!((l.matrix()[(0, 0)] - 2.75).abs() < 1e-13);
        assert_eq!(apply_uniform_loss(&s, 1.0).unwrap(), s);
        let vac = apply_uniform_loss(&s, 0.0).unwrap();
        assert!((vac.matrix() - CovarianceMatrix::vacuum(1).matrix()).amax() < 1e-15);
        assert!(apply_uniform_loss(&s, 1.2).is_err());
    }

    #[test]
    fn dimension_mismatch() {
        let s = CovarianceMatrix::vacuum(3);
        assert!(matches!(
            change_basis(&s, &BasisChange::identity(2)),
            Err(Error::DimensionMismatch { .. })
        ));
    }
}
