//! Small dense linear-algebra helpers shared across modules.

use nalgebra::DMatrix;
use num_complex::Complex64 as C64;

use crate::error::{Error, Result};

pub type RMatrix = DMatrix<f64>;
pub type CMatrix = DMatrix<C64>;

fn to_faer_c(m: &CMatrix) -> faer::Mat<C64> {
    faer::Mat::from_fn(m.nrows(), m.ncols(), |r, c| m[(r, c)])
}

fn to_faer_r(m: &RMatrix) -> faer::Mat<f64> {
    faer::Mat::from_fn(m.nrows(), m.ncols(), |r, c| m[(r, c)])
}

/// Thin singular value decomposition `M = U diag(s) Vᴴ`, `s` descending.
pub struct Svd {
    pub u: CMatrix,
    pub singular_values: Vec<f64>,
    pub v: CMatrix,
}

pub fn svd(m: &CMatrix) -> Result<Svd> {
    let f = to_faer_c(m)
        .thin_svd()
        .map_err(|e| Error::Numerical(format!("SVD did not converge: {e:?}")))?;
    let (u, v) = (f.U(), f.V());
    Ok(Svd {
        u: CMatrix::from_fn(u.nrows(), u.ncols(), |r, c| u[(r, c)]),
        singular_values: f.S().column_vector().iter().map(|s| s.re).collect(),
        v: CMatrix::from_fn(v.nrows(), v.ncols(), |r, c| v[(r, c)]),
    })
}

/// Singular values, descending.
pub fn singular_values(m: &CMatrix) -> Result<Vec<f64>> {
    to_faer_c(m)
        .singular_values()
        .map_err(|e| Error::Numerical(format!("SVD did not converge: {e:?}")))
}

/// Eigenvalues of a Hermitian matrix, ascending.
pub fn hermitian_eigenvalues(m: &CMatrix) -> Result<Vec<f64>> {
    to_faer_c(m)
        .self_adjoint_eigenvalues(faer::Side::Lower)
        .map_err(|e| Error::Numerical(format!("eigensolver did not converge: {e:?}")))
}

fn symmetric_eigen(m: &RMatrix) -> Result<(Vec<f64>, RMatrix)> {
    let f = to_faer_r(m)
        .self_adjoint_eigen(faer::Side::Lower)
        .map_err(|e| Error::Numerical(format!("eigensolver did not converge: {e:?}")))?;
    let u = f.U();
    Ok((
        f.S().column_vector().iter().copied().collect(),
        RMatrix::from_fn(u.nrows(), u.ncols(), |r, c| u[(r, c)]),
    ))
}

/// Eigen-decomposition of a real symmetric matrix with eigenpairs sorted by
/// descending eigenvalue. Columns of the returned matrix are the eigenvectors.
pub fn symmetric_eigen_desc(m: &RMatrix) -> Result<(Vec<f64>, RMatrix)> {
    let (values, vectors) = symmetric_eigen(m)?;
    let n = values.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| values[b].total_cmp(&values[a]).then(a.cmp(&b)));
    let sorted = order.iter().map(|&i| values[i]).collect();
    let vectors = RMatrix::from_fn(n, n, |r, c| vectors[(r, order[c])]);
    Ok((sorted, vectors))
}

/// `f(M)` for a real symmetric matrix, applied through its eigenvalues.
pub fn symmetric_function(m: &RMatrix, f: impl Fn(f64) -> f64) -> Result<RMatrix> {
    let (values, vectors) = symmetric_eigen(m)?;
    let d = RMatrix::from_diagonal(&nalgebra::DVector::from_iterator(values.len(), values.into_iter().map(f)));
    Ok(&vectors * d * vectors.transpose())
}

/// Real 2N×2N block image `[[A, -B], [B, A]]` of a complex matrix `A + iB`.
///
/// This is how a passive mode transformation acts on quadratures in xxpp
/// ordering.
pub fn realify(u: &CMatrix) -> RMatrix {
    let (rows, cols) = u.shape();
    let mut s = RMatrix::zeros(2 * rows, 2 * cols);
    for r in 0..rows {
        for c in 0..cols {
            let z = u[(r, c)];
            s[(r, c)] = z.re;
            s[(r, cols + c)] = -z.im;
            s[(rows + r, c)] = z.im;
            s[(rows + r, cols + c)] = z.re;
        }
    }
    s
}

pub fn max_abs_deviation_from_identity(m: &CMatrix) -> f64 {
    let mut worst: f64 = 0.0;
    for r in 0..m.nrows() {
        for c in 0..m.ncols() {
            let target = if r == c { C64::new(1.0, 0.0) } else { C64::new(0.0, 0.0) };
            worst = worst.max((m[(r, c)] - target).norm());
        }
    }
    worst
}

pub fn max_asymmetry(m: &RMatrix) -> f64 {
    let mut worst: f64 = 0.0;
    for r in 0..m.nrows() {
        for c in (r + 1)..m.ncols() {
            worst = worst.max((m[(r, c)] - m[(c, r)]).abs());
        }
    }
    worst
}

pub fn to_complex(m: &RMatrix) -> CMatrix {
    m.map(|x| C64::new(x, 0.0))
}
