use std::io::Write;

use num_complex::Complex64 as C64;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::gaussian::{symplectic_form, CovarianceMatrix};
use crate::linalg::{hermitian_eigenvalues, CMatrix};

/// Default threshold below which a PPT value counts as a violation.
pub const TOL_PPT: f64 = 1e-10;

/// Largest mode count accepted by [`enumerate_bipartitions`].
pub const MAX_BIPARTITION_MODES: usize = 24;

/// Split of the modes into `A` and its complement, stored as the bitmask of
/// `A`. Canonical form: `A` contains mode 0 and is a proper subset.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub struct Bipartition {
    mask: u32,
    n_modes: usize,
}

impl Bipartition {
    pub fn new(mask: u32, n_modes: usize) -> Result<Self> {
        if !(2..=MAX_BIPARTITION_MODES).contains(&n_modes) {
            return Err(Error::OutOfRange(format!("bipartitions need 2..=24 modes, got {n_modes}")));
        }
        let full = (1u32 << n_modes) - 1;
        if mask & !full != 0 || mask & 1 == 0 || mask == full {
            return Err(Error::OutOfRange(format!(
                "mask {mask:#b} is not a canonical bipartition of {n_modes} modes"
            )));
        }
        Ok(Self { mask, n_modes })
    }

    /// Canonical bipartition with `subset` on one side.
    pub fn from_subset(subset: &[usize], n_modes: usize) -> Result<Self> {
        let mut mask = 0u32;
        for &i in subset {
            if i >= n_modes {
                return Err(Error::OutOfRange(format!("mode {i} out of {n_modes}")));
            }
            mask |= 1 << i;
        }
        if mask & 1 == 0 {
            mask = ((1u32 << n_modes) - 1) & !mask;
        }
        Self::new(mask, n_modes)
    }

    pub fn mask(&self) -> u32 {
        self.mask
    }

    pub fn n_modes(&self) -> usize {
        self.n_modes
    }

    pub fn contains(&self, mode: usize) -> bool {
        self.mask >> mode & 1 == 1
    }

    pub fn subset_a(&self) -> Vec<usize> {
        (0..self.n_modes).filter(|&i| self.contains(i)).collect()
    }

    pub fn size_a(&self) -> usize {
        self.mask.count_ones() as usize
    }
}

/// All `2^(n-1) - 1` canonical bipartitions in ascending bitmask order.
pub fn enumerate_bipartitions(n: usize) -> Result<Vec<Bipartition>> {
    if !(2..=MAX_BIPARTITION_MODES).contains(&n) {
        return Err(Error::OutOfRange(format!("bipartitions need 2..=24 modes, got {n}")));
    }
    let count = (1u32 << (n - 1)) - 1;
    Ok((0..count)
        .map(|k| Bipartition {
            mask: 1 | (k << 1),
            n_modes: n,
        })
        .collect())
}

/// Minimum eigenvalue of `PΓP + iΩ/2`, where `P` flips the sign of `p_i` for
/// every mode in `A`. Negative values certify entanglement across `bp`.
pub fn ppt_value(cm: &CovarianceMatrix, bp: &Bipartition) -> Result<f64> {
    let n = cm.n_modes();
    if bp.n_modes() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            found: bp.n_modes(),
        });
    }
    let sign = |k: usize| if k >= n && bp.contains(k - n) { -1.0 } else { 1.0 };
    let g = cm.matrix();
    let om = symplectic_form(n);
    let h = CMatrix::from_fn(2 * n, 2 * n, |r, c| C64::new(sign(r) * sign(c) * g[(r, c)], 0.5 * om[(r, c)]));
    Ok(hermitian_eigenvalues(&h)?[0])
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PptEntry {
    pub bipartition: Bipartition,
    pub value: f64,
    pub violated: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PptReport {
    pub entries: Vec<PptEntry>,
    pub tolerance: f64,
    pub n_violated: usize,
    pub fraction_violated: f64,
}

#[derive(Serialize)]
struct PptSummary<'a> {
    n_modes: usize,
    n_bipartitions: usize,
    n_violated: usize,
    fraction_violated: f64,
    tolerance: f64,
    min_value: f64,
    max_value: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    units: Option<&'a str>,
}

impl PptReport {
    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn values(&self) -> Vec<f64> {
        self.entries.iter().map(|e| e.value).collect()
    }

    /// Columns `bitmask, subset_size, ppt_value, violated`.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["bitmask", "subset_size", "ppt_value", "violated"])?;
        for e in &self.entries {
            w.write_record([
                e.bipartition.mask().to_string(),
                e.bipartition.size_a().to_string(),
                e.value.to_string(),
                e.violated.to_string(),
            ])?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn summary_json(&self, units: Option<&str>) -> Result<String> {
        let (lo, hi) = self
            .entries
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), e| (a.min(e.value), b.max(e.value)));
        let s = PptSummary {
            n_modes: self.entries.first().map_or(0, |e| e.bipartition.n_modes()),
            n_bipartitions: self.entries.len(),
            n_violated: self.n_violated,
            fraction_violated: self.fraction_violated,
            tolerance: self.tolerance,
            min_value: lo,
            max_value: hi,
            units,
        };
        Ok(serde_json::to_string_pretty(&s)?)
    }
}

/// PPT value of every canonical bipartition, in canonical order.
pub fn ppt_scan(cm: &CovarianceMatrix, tol: f64) -> Result<PptReport> {
    let bps = enumerate_bipartitions(cm.n_modes())?;
    let values = bps
        .par_iter()
        .map(|bp| ppt_value(cm, bp))
        .collect::<Result<Vec<_>>>()?;
    let entries: Vec<PptEntry> = bps
        .into_iter()
        .zip(values)
        .map(|(bipartition, value)| PptEntry {
            bipartition,
            value,
            violated: value < -tol,
        })
        .collect();
    let n_violated = entries.iter().filter(|e| e.violated).count();
    let fraction_violated = n_violated as f64 / entries.len() as f64;
    Ok(PptReport {
        entries,
        tolerance: tol,
        n_violated,
        fraction_violated,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gaussian::{beam_splitter, change_basis, BasisChange};

    fn epr(r: f64) -> CovarianceMatrix {
        // x-squeezed mode 0, p-squeezed mode 1, then a 50:50 beam splitter
        let cm = CovarianceMatrix::squeezed_vacuum_r(&[-r, r]);
        let bs = beam_splitter(2, 0, 1, std::f64::consts::FRAC_PI_4, 0.0);
        change_basis(&cm, &BasisChange::isometry(bs).unwrap()).unwrap()
    }

    #[test]
    fn counts() {
        assert_eq!(enumerate_bipartitions(2).unwrap().len(), 1);
        assert_eq!(enumerate_bipartitions(4).unwrap().len(), 7);
        assert_eq!(enumerate_bipartitions(8).unwrap().len(), 127);
        assert!(enumerate_bipartitions(1).is_err());
        assert!(enumerate_bipartitions(25).is_err());
    }

    #[test]
    fn canonical_order_and_form() {
        let bps = enumerate_bipartitions(4).unwrap();
        let masks: Vec<u32> = bps.iter().map(|b| b.mask()).collect();
        assert_eq!(masks, vec![1, 3, 5, 7, 9, 11, 13]);
        assert_eq!(Bipartition::from_subset(&[1, 2, 3], 4).unwrap().mask(), 1);
        assert!(Bipartition::new(15, 4).is_err());
        assert!(Bipartition::new(2, 4).is_err());
    }

    #[test]
    fn epr_analytic() {
        let r = 0.5;
        let bp = Bipartition::new(1, 2).unwrap();
        let v = ppt_value(&epr(r), &bp).unwrap();
        assert!((v - ((-2.0 * r).exp() - 1.0) / 2.0).abs() < 1e-9, "{v}");
        let rep = ppt_scan(&epr(r), TOL_PPT).unwrap();
        assert_eq!(rep.n_violated, 1);
    }

    #[test]
    fn vacuum_and_products_not_violated() {
        let rep = ppt_scan(&CovarianceMatrix::vacuum(8), TOL_PPT).unwrap();
        assert_eq!(rep.n_violated, 0);
        assert!(rep.values().iter().all(|v| v.abs() < 1e-12));
        let prod = CovarianceMatrix::squeezed_vacuum_r(&[0.7, 0.3]);
        assert!(ppt_value(&prod, &Bipartition::new(1, 2).unwrap()).unwrap() >= -1e-10);
    }

    #[test]
    fn csv_layout() {
        let rep = ppt_scan(&epr(0.3), TOL_PPT).unwrap();
        let mut buf = Vec::new();
        rep.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("bitmask,subset_size,ppt_value,violated\n1,1,"));
        assert!(rep.summary_json(None).unwrap().contains("\"n_violated\": 1"));
    }
}
