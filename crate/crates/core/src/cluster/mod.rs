//! Cluster states from squeezed supermodes: adjacency presets, the passive
//! unitary that maps p-squeezed inputs to a graph state, nullifier variances
//! and node LO shapes.

use std::io::{Read, Write};

use num_complex::Complex64 as C64;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::gaussian::{apply_loss, change_basis, BasisChange, CovarianceMatrix};
use crate::linalg::{max_abs_deviation_from_identity, symmetric_function, CMatrix, RMatrix};
use crate::modes::{ModeBasis, SpectralMode};
use crate::spdc::SqueezingSpectrum;

/// Tolerance on `u u† = I` and `O Oᵀ = I`.
pub const TOL_UNITARY: f64 = 1e-10;

/// Graph presets.
pub const PRESETS: [&str; 5] = ["linear4", "square", "star", "linear6", "linear8"];

/// Symmetric, zero-diagonal graph adjacency matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct AdjacencyMatrix {
    v: RMatrix,
}

impl AdjacencyMatrix {
    pub fn new(v: RMatrix) -> Result<Self> {
        if v.nrows() != v.ncols() || v.nrows() == 0 {
            return Err(Error::InvalidAdjacency(format!("{}x{} is not square", v.nrows(), v.ncols())));
        }
        let n = v.nrows();
        for i in 0..n {
            if v[(i, i)] != 0.0 {
                return Err(Error::InvalidAdjacency(format!("non-zero diagonal entry at {i}")));
            }
            for j in 0..i {
                if v[(i, j)] != v[(j, i)] {
                    return Err(Error::InvalidAdjacency(format!("asymmetric entry ({i}, {j})")));
                }
                if !v[(i, j)].is_finite() {
                    return Err(Error::InvalidAdjacency(format!("non-finite entry ({i}, {j})")));
                }
            }
        }
        Ok(Self { v })
    }

    fn from_edges(n: usize, edges: &[(usize, usize)]) -> Self {
        let mut v = RMatrix::zeros(n, n);
        for &(i, j) in edges {
            v[(i, j)] = 1.0;
            v[(j, i)] = 1.0;
        }
        Self { v }
    }

    fn linear(n: usize) -> Self {
        let edges: Vec<_> = (1..n).map(|i| (i - 1, i)).collect();
        Self::from_edges(n, &edges)
    }

    pub fn preset(name: &str) -> Result<Self> {
        match name {
            "linear4" => Ok(Self::linear(4)),
            "linear6" => Ok(Self::linear(6)),
            "linear8" => Ok(Self::linear(8)),
            "square" => Ok(Self::from_edges(4, &[(0, 1), (1, 2), (2, 3), (3, 0)])),
            "star" => Ok(Self::from_edges(4, &[(0, 1), (0, 2), (0, 3)])),
            _ => Err(Error::UnknownPreset(name.to_string())),
        }
    }

    pub fn n_nodes(&self) -> usize {
        self.v.nrows()
    }

    pub fn matrix(&self) -> &RMatrix {
        &self.v
    }

    /// Sum of edge weights at each node.
    pub fn degrees(&self) -> Vec<f64> {
        self.v.row_iter().map(|r| r.sum()).collect()
    }

    /// Whether all weights are 0 or 1.
    pub fn is_unweighted(&self) -> bool {
        self.v.iter().all(|&x| x == 0.0 || x == 1.0)
    }

    /// Plain comma-separated matrix, no header.
    pub fn read_csv<R: Read>(input: R) -> Result<Self> {
        let mut r = csv::ReaderBuilder::new().has_headers(false).trim(csv::Trim::All).from_reader(input);
        let mut rows = Vec::new();
        for rec in r.records() {
            let rec = rec?;
            let row = rec
                .iter()
                .map(|s| s.parse::<f64>().map_err(|e| Error::Parse(format!("adjacency entry {s:?}: {e}"))))
                .collect::<Result<Vec<_>>>()?;
            rows.push(row);
        }
        let n = rows.len();
        if rows.iter().any(|r| r.len() != n) {
            return Err(Error::InvalidAdjacency("rows must have as many entries as there are rows".into()));
        }
        Self::new(RMatrix::from_fn(n, n, |i, j| rows[i][j]))
    }

    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(out);
        for row in self.v.row_iter() {
            w.write_record(row.iter().map(|x| x.to_string()))?;
        }
        w.flush()?;
        Ok(())
    }
}

/// `u = (I + iV)(I + V²)^{-1/2} O`: node `i` annihilation operator is
/// `sum_j u_ij a_j` over the input (p-squeezed) modes.
#[derive(Clone, Debug)]
pub struct ClusterUnitary {
    u: CMatrix,
    o: RMatrix,
}

impl ClusterUnitary {
    pub fn matrix(&self) -> &CMatrix {
        &self.u
    }

    pub fn orthogonal_freedom(&self) -> &RMatrix {
        &self.o
    }

    pub fn n_nodes(&self) -> usize {
        self.u.nrows()
    }
}

pub fn cluster_unitary(v: &AdjacencyMatrix, o: Option<&RMatrix>) -> Result<ClusterUnitary> {
    let n = v.n_nodes();
    let o = match o {
        Some(o) => {
            if o.nrows() != n || o.ncols() != n {
                return Err(Error::DimensionMismatch {
                    expected: n,
                    found: o.nrows(),
                });
            }
            let dev = (o * o.transpose() - RMatrix::identity(n, n)).amax();
            if dev > TOL_UNITARY {
                return Err(Error::OutOfRange(format!("O is not orthogonal: max |OOᵀ - I| = {dev:.3e}")));
            }
            o.clone()
        }
        None => RMatrix::identity(n, n),
    };
    let vm = v.matrix();
    let m = RMatrix::identity(n, n) + vm * vm;
    // eigenvalues of I + V² are ≥ 1, so the inverse root always exists
    let a = symmetric_function(&m, |x| 1.0 / x.sqrt())? * &o;
    let b = vm * &a;
    let u = CMatrix::from_fn(n, n, |i, j| C64::new(a[(i, j)], b[(i, j)]));
    let dev = max_abs_deviation_from_identity(&(&u * u.adjoint()));
    assert!(dev < TOL_UNITARY, "cluster unitary deviates from unitarity by {dev:e}");
    Ok(ClusterUnitary { u, o })
}

/// Box-plot summary; quartiles by linear interpolation between order
/// statistics.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BoxStats {
    pub min: f64,
    pub q1: f64,
    pub median: f64,
    pub q3: f64,
    pub max: f64,
    pub mean: f64,
}

impl BoxStats {
    pub fn from_values(values: &[f64]) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::OutOfRange("box statistics of an empty set".into()));
        }
        let mut s = values.to_vec();
        s.sort_by(f64::total_cmp);
        let q = |p: f64| {
            let x = p * (s.len() - 1) as f64;
            let i = x.floor() as usize;
            let f = x - i as f64;
            if i + 1 < s.len() {
                s[i] + f * (s[i + 1] - s[i])
            } else {
                s[i]
            }
        };
        Ok(Self {
            min: s[0],
            q1: q(0.25),
            median: q(0.5),
            q3: q(0.75),
            max: s[s.len() - 1],
            mean: s.iter().sum::<f64>() / s.len() as f64,
        })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct NullifierReport {
    pub variances: Vec<f64>,
    pub shot_refs: Vec<f64>,
    pub squeezing_db: Vec<f64>,
    pub stats: BoxStats,
}

impl NullifierReport {
    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }
}

/// `Var(δ_i) = [M Γ Mᵀ]_ii` with `M = [-V, I]`.
pub fn nullifier_variances(v: &AdjacencyMatrix, cm: &CovarianceMatrix) -> Result<Vec<f64>> {
    let n = v.n_nodes();
    if cm.n_modes() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            found: cm.n_modes(),
        });
    }
    let mut m = RMatrix::zeros(n, 2 * n);
    m.view_mut((0, 0), (n, n)).copy_from(&(-v.matrix()));
    m.view_mut((0, n), (n, n)).copy_from(&RMatrix::identity(n, n));
    let cov = &m * cm.matrix() * m.transpose();
    Ok((0..n).map(|i| cov[(i, i)]).collect())
}

/// Nullifier statistics for an arbitrary input state of the cluster's input
/// modes: `input` goes through `u`, then per-node transmissions `eta`.
pub fn nullifier_report_from_cm(
    v: &AdjacencyMatrix,
    input: &CovarianceMatrix,
    u: &ClusterUnitary,
    eta: &[f64],
) -> Result<NullifierReport> {
    let n = v.n_nodes();
    if u.n_nodes() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            found: u.n_nodes(),
        });
    }
    let bc = BasisChange::isometry(u.matrix().clone())?;
    let cluster = apply_loss(&change_basis(input, &bc)?, eta)?;
    let variances = nullifier_variances(v, &cluster)?;
    let shot_refs = nullifier_variances(v, &change_basis(&CovarianceMatrix::vacuum(n), &bc)?)?;
    let squeezing_db: Vec<f64> = variances
        .iter()
        .zip(&shot_refs)
        .map(|(var, s)| 10.0 * (var / s).log10())
        .collect();
    let stats = BoxStats::from_values(&squeezing_db)?;
    Ok(NullifierReport {
        variances,
        shot_refs,
        squeezing_db,
        stats,
    })
}

/// Nullifiers of the cluster built from independent p-squeezed inputs.
///
/// Node `i` is fed by supermode `permutation[i]` (identity by default).
pub fn nullifier_report(
    v: &AdjacencyMatrix,
    spectrum: &SqueezingSpectrum,
    o: Option<&RMatrix>,
    eta: &[f64],
    permutation: Option<&[usize]>,
) -> Result<NullifierReport> {
    let n = v.n_nodes();
    let perm = resolve_permutation(n, spectrum.r.len(), permutation)?;
    let r: Vec<f64> = perm.iter().map(|&k| spectrum.r[k]).collect();
    let u = cluster_unitary(v, o)?;
    nullifier_report_from_cm(v, &CovarianceMatrix::squeezed_vacuum_r(&r), &u, eta)
}

fn resolve_permutation(n: usize, available: usize, permutation: Option<&[usize]>) -> Result<Vec<usize>> {
    let perm: Vec<usize> = match permutation {
        Some(p) => p.to_vec(),
        None => (0..n).collect(),
    };
    if perm.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            found: perm.len(),
        });
    }
    let mut seen = vec![false; available];
    for &k in &perm {
        if k >= available {
            return Err(Error::DimensionMismatch {
                expected: k + 1,
                found: available,
            });
        }
        if std::mem::replace(&mut seen[k], true) {
            return Err(Error::OutOfRange(format!("supermode {k} assigned to two nodes")));
        }
    }
    Ok(perm)
}

/// Spectral shape of every node: `f_i = sum_j conj(u_ij) h_{perm[j]}`.
///
/// Homodyning with LO `f_i` measures the quadratures of node `i`.
pub fn nullifier_lo_masks(
    v: &AdjacencyMatrix,
    basis: &ModeBasis,
    u: &ClusterUnitary,
    permutation: Option<&[usize]>,
) -> Result<Vec<SpectralMode>> {
    let n = v.n_nodes();
    if basis.len() < n {
        return Err(Error::DimensionMismatch {
            expected: n,
            found: basis.len(),
        });
    }
    if u.n_nodes() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            found: u.n_nodes(),
        });
    }
    let perm = resolve_permutation(n, basis.len(), permutation)?;
    let inputs: Vec<&SpectralMode> = perm.iter().map(|&k| basis.mode(k)).collect();
    (0..n)
        .map(|i| {
            let coeffs: Vec<C64> = (0..n).map(|j| u.matrix()[(i, j)].conj()).collect();
            SpectralMode::combination(&inputs, &coeffs)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gaussian::homodyne_form;
    use crate::modes::{hermite_gauss_basis, FrequencyGrid};

    fn spectrum(r: &[f64]) -> SqueezingSpectrum {
        SqueezingSpectrum::from_r(r.to_vec()).unwrap()
    }

    #[test]
    fn presets() {
        let star = AdjacencyMatrix::preset("star").unwrap();
        let row0: Vec<f64> = star.matrix().row(0).iter().copied().collect();
        assert_eq!(row0, vec![0.0, 1.0, 1.0, 1.0]);
        for i in 1..4 {
            assert_eq!(star.degrees()[i], 1.0);
            assert_eq!(star.matrix()[(i, 0)], 1.0);
        }
        let l8 = AdjacencyMatrix::preset("linear8").unwrap();
        for i in 0..8usize {
            for j in 0..8usize {
                let expect = if i.abs_diff(j) == 1 { 1.0 } else { 0.0 };
                assert_eq!(l8.matrix()[(i, j)], expect);
            }
        }
        assert_eq!(AdjacencyMatrix::preset("square").unwrap().degrees(), vec![2.0; 4]);
        assert!(matches!(AdjacencyMatrix::preset("ring"), Err(Error::UnknownPreset(_))));
    }

    #[test]
    fn invalid_adjacency() {
        let mut v = RMatrix::zeros(3, 3);
        v[(0, 1)] = 1.0;
        assert!(AdjacencyMatrix::new(v.clone()).is_err());
        v[(1, 0)] = 1.0;
        v[(2, 2)] = 1.0;
        assert!(AdjacencyMatrix::new(v).is_err());
    }

    #[test]
    fn construction_identity() {
        for name in PRESETS {
            let v = AdjacencyMatrix::preset(name).unwrap();
            let u = cluster_unitary(&v, None).unwrap();
            let re = u.matrix().map(|z| z.re);
            let im = u.matrix().map(|z| z.im);
            assert!((im - v.matrix() * re).amax() < 1e-12, "{name}");
        }
        let empty = AdjacencyMatrix::new(RMatrix::zeros(3, 3)).unwrap();
        let u = cluster_unitary(&empty, None).unwrap();
        assert!(max_abs_deviation_from_identity(u.matrix()) < 1e-15);
    }

    #[test]
    fn vacuum_and_uniform_squeezing() {
        let v = AdjacencyMatrix::preset("linear4").unwrap();
        let rep = nullifier_report(&v, &spectrum(&[0.0; 4]), None, &[1.0; 4], None).unwrap();
        for (a, b) in rep.variances.iter().zip([1.0, 1.5, 1.5, 1.0]) {
            assert!((a - b).abs() < 1e-12);
        }
        assert!(rep.squeezing_db.iter().all(|d| d.abs() < 1e-12));
        let rep = nullifier_report(&v, &spectrum(&[0.5; 4]), None, &[1.0; 4], None).unwrap();
        let expect = 10.0 * (-1.0f64).exp().log10();
        assert!(rep.squeezing_db.iter().all(|d| (d - expect).abs() < 1e-9));
    }

    #[test]
    fn unequal_squeezing_spreads() {
        let v = AdjacencyMatrix::preset("star").unwrap();
        let rep = nullifier_report(&v, &spectrum(&[0.8, 0.6, 0.5, 0.3]), None, &[0.5; 4], None).unwrap();
        assert!(rep.stats.max - rep.stats.min > 0.0);
        assert!(rep.stats.max < 0.0);
    }

    #[test]
    fn box_stats_interpolate() {
        let s = BoxStats::from_values(&[4.0, 1.0, 3.0, 2.0]).unwrap();
        assert_eq!((s.min, s.q1, s.median, s.q3, s.max), (1.0, 1.75, 2.5, 3.25, 4.0));
        assert_eq!(s.mean, 2.5);
    }

    #[test]
    fn lo_masks_measure_nodes() {
        let g = FrequencyGrid::centered(1560.0, 200.0, 0.5).unwrap();
        let hg = hermite_gauss_basis(&g, 1560.0, 45.0, 6).unwrap();
        let v = AdjacencyMatrix::preset("linear4").unwrap();
        let u = cluster_unitary(&v, None).unwrap();
        let masks = nullifier_lo_masks(&v, &hg, &u, None).unwrap();
        for i in 0..4 {
            for j in 0..4 {
                let ip = masks[i].inner(&masks[j]).norm();
                assert!((ip - if i == j { 1.0 } else { 0.0 }).abs() < 1e-10);
            }
        }
        // homodyne on the node LO equals the node block of the cluster CM
        let r = [0.4, 0.3, 0.2, 0.1, 0.0, 0.0];
        let cm = CovarianceMatrix::squeezed_vacuum_r(&r);
        let node = change_basis(
            &CovarianceMatrix::squeezed_vacuum_r(&r[..4]),
            &BasisChange::isometry(u.matrix().clone()).unwrap(),
        )
        .unwrap();
        for i in 0..4 {
            let form = homodyne_form(&cm, &hg, &masks[i]).unwrap();
            assert!((form.variance(0.0) - node.matrix()[(i, i)]).abs() < 1e-10);
            assert!((form.variance(std::f64::consts::FRAC_PI_2) - node.matrix()[(4 + i, 4 + i)]).abs() < 1e-10);
        }
        let star = AdjacencyMatrix::preset("star").unwrap();
        let us = cluster_unitary(&star, None).unwrap();
        let m0 = &nullifier_lo_masks(&star, &hg, &us, None).unwrap()[0];
        for k in 0..4 {
            assert!(m0.inner(hg.mode(k)).norm() > 1e-3);
        }
    }

    #[test]
    fn csv_round_trip() {
        let v = AdjacencyMatrix::preset("square").unwrap();
        let mut buf = Vec::new();
        v.write_csv(&mut buf).unwrap();
        assert_eq!(AdjacencyMatrix::read_csv(buf.as_slice()).unwrap(), v);
    }
}
