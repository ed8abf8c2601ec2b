use num_complex::Complex64 as C64;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::gaussian::{to_db, CovarianceMatrix};
use crate::linalg::{symmetric_eigen_desc, RMatrix};
use crate::modes::{ModeBasis, SpectralMode};

/// Relative bound on the xp-block Frobenius norm (times the trace).
pub const DEFAULT_CROSS_TOL: f64 = 1e-6;

/// xx/pp eigenvector pairs overlapping less than this are flagged.
pub const MIN_PAIR_OVERLAP: f64 = 0.9;

/// Eigenmodes of a covariance matrix with vanishing xp block.
#[derive(Clone, Debug)]
pub struct SupermodeReport {
    /// Spectral shapes of the xx eigenvectors, largest antisqueezing first.
    pub eigenmodes: ModeBasis,
    /// Column `k` holds eigenmode `k` in the coordinates of the input basis.
    pub x_vectors: RMatrix,
    /// pp eigenvector paired with each column of `x_vectors`.
    pub p_vectors: RMatrix,
    pub var_x: Vec<f64>,
    pub var_p: Vec<f64>,
    /// `to_db` of the smaller of the paired variances.
    pub squeezing_db: Vec<f64>,
    pub antisqueezing_db: Vec<f64>,
    pub pair_overlaps: Vec<f64>,
    pub warnings: Vec<String>,
}

#[derive(Serialize)]
struct Row {
    mode: usize,
    sq_db: f64,
    antisq_db: f64,
    var_x: f64,
    var_p: f64,
    pair_overlap: f64,
}

impl SupermodeReport {
    pub fn len(&self) -> usize {
        self.var_x.len()
    }

    pub fn is_empty(&self) -> bool {
        self.var_x.is_empty()
    }

    /// xx and pp blocks rebuilt from the eigenpairs.
    pub fn reassemble(&self) -> (RMatrix, RMatrix) {
        let xx = &self.x_vectors * RMatrix::from_diagonal(&self.var_x.clone().into()) * self.x_vectors.transpose();
        let pp = &self.p_vectors * RMatrix::from_diagonal(&self.var_p.clone().into()) * self.p_vectors.transpose();
        (xx, pp)
    }

    /// Columns `mode, sq_db, antisq_db, var_x, var_p, pair_overlap`.
    pub fn write_csv<W: std::io::Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        for k in 0..self.len() {
            w.serialize(Row {
                mode: k,
                sq_db: self.squeezing_db[k],
                antisq_db: self.antisqueezing_db[k],
                var_x: self.var_x[k],
                var_p: self.var_p[k],
                pair_overlap: self.pair_overlaps[k],
            })?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Flip `v` so its largest-magnitude entry is positive.
fn fix_sign(mut v: Vec<f64>) -> Vec<f64> {
    let pivot = v.iter().copied().fold(0.0f64, |a, b| if b.abs() > a.abs() { b } else { a });
    if pivot < 0.0 {
        v.iter_mut().for_each(|x| *x = -*x);
    }
    v
}

/// Diagonalize the xx and pp blocks separately and pair their eigenvectors.
///
/// xx eigenvectors are visited by descending variance; each takes the
/// unclaimed pp eigenvector of largest |overlap| (lowest index on ties).
/// Pairs are then ordered by their larger variance, descending.
/// `basis` supplies the spectral shape of every CM mode and must be
/// orthonormal.
pub fn extract_supermodes(cm: &CovarianceMatrix, basis: &ModeBasis, cross_tol: f64) -> Result<SupermodeReport> {
    let n = cm.n_modes();
    if basis.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            found: basis.len(),
        });
    }
    if !basis.is_orthonormal() {
        return Err(Error::InvalidMode("supermode extraction needs an orthonormal basis".into()));
    }
    let limit = cross_tol * cm.trace();
    let norm = cm.xp_norm();
    if norm > limit {
        return Err(Error::AssumptionViolated { norm, limit });
    }

    let (ex, vx) = symmetric_eigen_desc(&cm.xx())?;
    let (ep, vp) = symmetric_eigen_desc(&cm.pp())?;
    let mut claimed = vec![false; n];
    let mut x_vectors = RMatrix::zeros(n, n);
    let mut p_vectors = RMatrix::zeros(n, n);
    let mut var_x = Vec::with_capacity(n);
    let mut var_p = Vec::with_capacity(n);
    let mut pair_overlaps = Vec::with_capacity(n);
    for k in 0..n {
        let xcol = vx.column(k);
        let mut best = None;
        let mut best_ov = -1.0;
        for j in 0..n {
            if claimed[j] {
                continue;
            }
            let ov = xcol.dot(&vp.column(j)).abs();
            if ov > best_ov {
                best_ov = ov;
                best = Some(j);
            }
        }
        let j = best.expect("one pp eigenvector left per xx eigenvector");
        claimed[j] = true;
        let xv = fix_sign(xcol.iter().copied().collect());
        let mut pv: Vec<f64> = vp.column(j).iter().copied().collect();
        let dot: f64 = xv.iter().zip(&pv).map(|(a, b)| a * b).sum();
        if dot < 0.0 {
            pv.iter_mut().for_each(|x| *x = -*x);
        }
        x_vectors.set_column(k, &xv.into());
        p_vectors.set_column(k, &pv.into());
        var_x.push(ex[k]);
        var_p.push(ep[j]);
        pair_overlaps.push(best_ov);
    }

    // Report in decreasing order of the antisqueezed variance; an eigenmode
    // squeezed along x is quoted as if squeezed along p.
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| var_x[b].max(var_p[b]).total_cmp(&var_x[a].max(var_p[a])));
    let x_vectors = RMatrix::from_fn(n, n, |r, c| x_vectors[(r, order[c])]);
    let p_vectors = RMatrix::from_fn(n, n, |r, c| p_vectors[(r, order[c])]);
    let var_x: Vec<f64> = order.iter().map(|&k| var_x[k]).collect();
    let var_p: Vec<f64> = order.iter().map(|&k| var_p[k]).collect();
    let pair_overlaps: Vec<f64> = order.iter().map(|&k| pair_overlaps[k]).collect();
    let warnings: Vec<String> = pair_overlaps
        .iter()
        .enumerate()
        .filter(|(_, &ov)| ov < MIN_PAIR_OVERLAP)
        .map(|(k, ov)| format!("eigenmode {k}: xx/pp eigenvector overlap {ov:.4} < {MIN_PAIR_OVERLAP}"))
        .collect();

    let refs: Vec<&SpectralMode> = basis.modes().iter().collect();
    let modes = (0..n)
        .map(|k| {
            let coeffs: Vec<C64> = x_vectors.column(k).iter().map(|&c| C64::new(c, 0.0)).collect();
            SpectralMode::combination(&refs, &coeffs)
        })
        .collect::<Result<Vec<_>>>()?;
    let eigenmodes = ModeBasis::orthonormal(format!("eigenmodes-{}", basis.label()), modes)?;
    let squeezing_db = (0..n).map(|k| to_db(var_x[k].min(var_p[k]))).collect::<Result<Vec<_>>>()?;
    let antisqueezing_db = (0..n).map(|k| to_db(var_x[k].max(var_p[k]))).collect::<Result<Vec<_>>>()?;
    Ok(SupermodeReport {
        eigenmodes,
        x_vectors,
        p_vectors,
        var_x,
        var_p,
        squeezing_db,
        antisqueezing_db,
        pair_overlaps,
        warnings,
    })
}
