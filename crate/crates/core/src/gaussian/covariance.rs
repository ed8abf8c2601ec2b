use std::io::{BufRead, BufReader, Read, Write};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{hermitian_eigenvalues, max_asymmetry, symmetric_function, to_complex, CMatrix, RMatrix};
use crate::spdc::SqueezingSpectrum;
use num_complex::Complex64 as C64;

/// Largest |Γ - Γᵀ| entry accepted as symmetric.
pub const TOL_SYMMETRY: f64 = 1e-12;

/// Most negative eigenvalue of Γ + iΩ/2 accepted as physical.
pub const TOL_PHYSICAL: f64 = -1e-9;

/// Normalization of externally supplied covariance matrices.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CovarianceUnits {
    /// Vacuum variance 1/2 (the internal convention).
    #[default]
    VacuumHalf,
    /// Vacuum variance 1 (shot-noise units); halved on ingest.
    ShotNoise,
}

/// Symplectic form `[[0, I], [-I, 0]]` in xxpp ordering.
pub fn symplectic_form(n: usize) -> RMatrix {
    let mut om = RMatrix::zeros(2 * n, 2 * n);
    for i in 0..n {
        om[(i, n + i)] = 1.0;
        om[(n + i, i)] = -1.0;
    }
    om
}

/// `min eig(Γ + iΩ/2)`; non-negative for physical states.
pub fn physicality_margin(matrix: &RMatrix) -> Result<f64> {
    let n = matrix.nrows() / 2;
    let om = symplectic_form(n);
    let h = CMatrix::from_fn(2 * n, 2 * n, |r, c| C64::new(matrix[(r, c)], 0.5 * om[(r, c)]));
    Ok(hermitian_eigenvalues(&h)?[0])
}

/// Quadrature covariance matrix in xxpp ordering, vacuum variance 1/2.
#[derive(Clone, Debug, PartialEq)]
pub struct CovarianceMatrix {
    matrix: RMatrix,
}

impl CovarianceMatrix {
    /// Validate symmetry and physicality.
    pub fn new(matrix: RMatrix) -> Result<Self> {
        let cm = Self::unchecked(matrix)?;
        let margin = physicality_margin(&cm.matrix)?;
        if margin < TOL_PHYSICAL {
            return Err(Error::Unphysical(margin));
        }
        Ok(cm)
    }

    /// Validate shape and symmetry only. Used for measured matrices and for
    /// second moments of non-orthogonal mode sets, where Γ + iΩ/2 ⪰ 0 need
    /// not hold.
    pub fn unchecked(matrix: RMatrix) -> Result<Self> {
        if matrix.nrows() != matrix.ncols() || matrix.nrows() % 2 != 0 || matrix.nrows() == 0 {
            return Err(Error::DimensionMismatch {
                expected: 2 * (matrix.nrows() / 2).max(1),
                found: matrix.ncols(),
            });
        }
        let asym = max_asymmetry(&matrix);
        if asym > TOL_SYMMETRY {
            return Err(Error::NotSymmetric(asym));
        }
        let matrix = (&matrix + matrix.transpose()) * 0.5;
        Ok(Self { matrix })
    }

    pub fn vacuum(n_modes: usize) -> Self {
        Self {
            matrix: RMatrix::identity(2 * n_modes, 2 * n_modes) * 0.5,
        }
    }

    /// Independent p-squeezed vacua: Var(x_k) = e^{2r_k}/2, Var(p_k) = e^{-2r_k}/2.
    pub fn squeezed_vacuum(spectrum: &SqueezingSpectrum) -> Self {
        Self::squeezed_vacuum_r(&spectrum.r)
    }

    pub fn squeezed_vacuum_r(r: &[f64]) -> Self {
        let n = r.len();
        let mut m = RMatrix::zeros(2 * n, 2 * n);
        for (k, &rk) in r.iter().enumerate() {
            m[(k, k)] = 0.5 * (2.0 * rk).exp();
            m[(n + k, n + k)] = 0.5 * (-2.0 * rk).exp();
        }
        Self { matrix: m }
    }

    pub fn n_modes(&self) -> usize {
        self.matrix.nrows() / 2
    }

    pub fn matrix(&self) -> &RMatrix {
        &self.matrix
    }

    pub fn xx(&self) -> RMatrix {
        let n = self.n_modes();
        self.matrix.view((0, 0), (n, n)).into_owned()
    }

    pub fn pp(&self) -> RMatrix {
        let n = self.n_modes();
        self.matrix.view((n, n), (n, n)).into_owned()
    }

    pub fn xp(&self) -> RMatrix {
        let n = self.n_modes();
        self.matrix.view((0, n), (n, n)).into_owned()
    }

    pub fn trace(&self) -> f64 {
        self.matrix.trace()
    }

    /// Frobenius norm of the xp block.
    pub fn xp_norm(&self) -> f64 {
        self.xp().norm()
    }

    pub fn physicality_margin(&self) -> Result<f64> {
        physicality_margin(&self.matrix)
    }

    /// Symplectic eigenvalues ν_k ≥ 1/2 (for physical states), ascending.
    /// Obtained as the positive eigenvalues of the Hermitian matrix
    /// `Γ^{1/2} (iΩ) Γ^{1/2}`, which shares its spectrum with `iΩΓ`.
    pub fn symplectic_eigenvalues(&self) -> Result<Vec<f64>> {
        let n = self.n_modes();
        let root = symmetric_function(&self.matrix, |x| x.max(0.0).sqrt())?;
        let om = to_complex(&symplectic_form(n)) * C64::new(0.0, 1.0);
        let rc = to_complex(&root);
        let h = &rc * om * &rc;
        let ev = hermitian_eigenvalues(&h)?;
        Ok(ev[n..].to_vec())
    }

    /// `n_modes=<N>, convention=vacuum_half` followed by 2N comma-separated
    /// rows.
    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "n_modes={}, convention=vacuum_half", self.n_modes())?;
        let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(out);
        for r in 0..self.matrix.nrows() {
            w.write_record(self.matrix.row(r).iter().map(|v| v.to_string()))?;
        }
        w.flush()?;
        Ok(())
    }

    /// Read the format of [`write_csv`](Self::write_csv). The header's
    /// convention (`vacuum_half` or `shot_noise`) overrides `default_units`
    /// when present. Physicality is not enforced.
    pub fn read_csv<R: Read>(input: R, default_units: CovarianceUnits) -> Result<Self> {
        let mut reader = BufReader::new(input);
        let mut head = String::new();
        reader.read_line(&mut head)?;
        let mut n_modes = None;
        let mut units = default_units;
        for field in head.trim().split(',') {
            let Some((k, v)) = field.split_once('=') else { continue };
            match (k.trim(), v.trim()) {
                ("n_modes", v) => {
                    n_modes = Some(v.parse::<usize>().map_err(|_| Error::Parse(format!("bad n_modes {v:?}")))?)
                }
                ("convention", "vacuum_half") => units = CovarianceUnits::VacuumHalf,
                ("convention", "shot_noise") => units = CovarianceUnits::ShotNoise,
                ("convention", other) => return Err(Error::Parse(format!("unknown convention {other:?}"))),
                _ => {}
            }
        }
        let n = n_modes.ok_or_else(|| Error::Parse("covariance CSV header lacks n_modes=<N>".into()))?;
        let mut rdr = csv::ReaderBuilder::new().has_headers(false).from_reader(reader);
        let mut values = Vec::with_capacity(4 * n * n);
        let mut rows = 0;
        for rec in rdr.records() {
            let rec = rec?;
            if rec.len() != 2 * n {
                return Err(Error::Parse(format!("row {} has {} columns, expected {}", rows + 1, rec.len(), 2 * n)));
            }
            for s in rec.iter() {
                values.push(s.trim().parse::<f64>().map_err(|e| Error::Parse(format!("row {}: {e}", rows + 1)))?);
            }
            rows += 1;
        }
        if rows != 2 * n {
            return Err(Error::Parse(format!("expected {} rows, found {rows}", 2 * n)));
        }
        let mut m = RMatrix::from_row_slice(2 * n, 2 * n, &values);
        if units == CovarianceUnits::ShotNoise {
            m *= 0.5;
        }
        Self::unchecked(m)
    }
}
