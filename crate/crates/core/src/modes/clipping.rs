use nalgebra::DMatrix;
use num_complex::Complex64 as C64;
use serde::Serialize;

use super::{FrequencyGrid, ModeBasis, SpectralMode};
use crate::error::{Error, Result};
use crate::linalg::{hermitian_eigenvalues, singular_values, symmetric_eigen_desc, CMatrix};

/// Measured singular values of the first 21 HG modes after clipping by the
/// pulse-shaper optics, descending.
pub const CLIPPED_HG_SINGULAR_VALUES: [f64; 21] = [
    1.42, 1.40, 1.31, 1.28, 1.21, 1.19, 1.18, 1.12, 1.09, 1.08, 1.02, 0.99, 0.97, 0.94, 0.90,
    0.84, 0.60, 0.30, 0.08, 0.02, 0.005,
];

/// Binary spectral passband `[lo, hi]` in nm, inclusive.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct ClippingWindow {
    lo: f64,
    hi: f64,
}

impl ClippingWindow {
    /// `lo < hi`, both inside the grid range.
    pub fn new(grid: &FrequencyGrid, lo: f64, hi: f64) -> Result<Self> {
        if !(lo < hi) {
            return Err(Error::InvalidWindow {
                lo,
                hi,
                reason: "lower edge must be below upper edge".into(),
            });
        }
        if lo < grid.min() || hi > grid.max() {
            return Err(Error::InvalidWindow {
                lo,
                hi,
                reason: format!("outside grid range [{}, {}]", grid.min(), grid.max()),
            });
        }
        Ok(Self { lo, hi })
    }

    pub fn lo(&self) -> f64 {
        self.lo
    }

    pub fn hi(&self) -> f64 {
        self.hi
    }

    pub fn contains(&self, nm: f64) -> bool {
        nm >= self.lo && nm <= self.hi
    }
}

/// Zero every amplitude outside `window`.
///
/// With `renormalize`, surviving modes are rescaled to unit norm and modes
/// left with no support are dropped; their source indices are listed in
/// [`ModeBasis::dropped`]. The result is always flagged non-orthogonal.
pub fn apply_clipping(basis: &ModeBasis, window: &ClippingWindow, renormalize: bool) -> Result<ModeBasis> {
    let grid = basis.grid();
    let mask: Vec<bool> = grid.points().iter().map(|&p| window.contains(p)).collect();
    let zero = C64::new(0.0, 0.0);

    let mut kept = Vec::with_capacity(basis.len());
    let mut dropped = Vec::new();
    for (k, m) in basis.modes().iter().enumerate() {
        let amp: Vec<C64> = m
            .amplitude()
            .iter()
            .zip(&mask)
            .map(|(&a, &inside)| if inside { a } else { zero })
            .collect();
        if !renormalize {
            kept.push(SpectralMode::unnormalized(grid, amp)?);
            continue;
        }
        match SpectralMode::normalized(grid, amp) {
            Ok(mode) => kept.push(mode),
            Err(_) => dropped.push(k),
        }
    }
    if kept.is_empty() {
        return Err(Error::InvalidWindow {
            lo: window.lo,
            hi: window.hi,
            reason: "every mode lies outside the window".into(),
        });
    }

    let mut out = ModeBasis::non_orthogonal(format!("{}-clipped", basis.label()), kept)?
        .with_conventions(basis.conventions().clone())
        .with_convention("clip_lo_nm", window.lo)
        .with_convention("clip_hi_nm", window.hi)
        .with_dropped(dropped.clone());
    if !dropped.is_empty() {
        out = out.with_warning(format!("modes {dropped:?} have no support inside the window and were dropped"));
    }
    Ok(out)
}

/// Singular-value spectrum of a mode set.
#[derive(Clone, Debug, Serialize)]
pub struct RankReport {
    /// Descending.
    pub singular_values: Vec<f64>,
    pub rank: usize,
    pub threshold_fraction: f64,
}

/// Singular values of the matrix whose rows are the mode amplitudes scaled
/// by the square root of the quadrature weights, so that an orthonormal
/// basis gives all ones. `rank` counts values of at least
/// `threshold_fraction` times the largest (less 1e-9 relative).
pub fn rank_analysis(basis: &ModeBasis, threshold_fraction: f64) -> Result<RankReport> {
    if !(0.0..=1.0).contains(&threshold_fraction) {
        return Err(Error::OutOfRange(format!(
            "threshold fraction {threshold_fraction} outside [0, 1]"
        )));
    }
    let sw: Vec<f64> = basis.grid().weights().iter().map(|w| w.sqrt()).collect();
    let rows = CMatrix::from_fn(basis.len(), sw.len(), |r, c| basis.mode(r).amplitude()[c] * sw[c]);
    let sv = singular_values(&rows)?;
    Ok(rank_report(sv, threshold_fraction))
}

fn rank_report(singular_values: Vec<f64>, threshold_fraction: f64) -> RankReport {
    let max = singular_values.first().copied().unwrap_or(0.0);
    // relative slack so equal singular values all count at threshold 1
    let cut = threshold_fraction * max * (1.0 - 1e-9);
    let rank = singular_values.iter().filter(|&&s| s >= cut).count();
    RankReport {
        singular_values,
        rank,
        threshold_fraction,
    }
}

/// Window whose clipped-and-renormalized singular values best match a target
/// spectrum.
#[derive(Clone, Debug, Serialize)]
pub struct WindowFit {
    pub window: ClippingWindow,
    /// Sum of squared differences to the target.
    pub residual: f64,
    pub report: RankReport,
}

/// Running sums of the per-sample Gram contributions
/// `w_s conj(a_i(s)) a_j(s)`, so the Gram matrix of any clipped window is a
/// difference of two entries.
struct GramPrefix {
    n: usize,
    sums: Vec<Vec<C64>>,
}

impl GramPrefix {
    fn new(basis: &ModeBasis) -> Self {
        let n = basis.len();
        let w = basis.grid().weights();
        let mut sums = Vec::with_capacity(w.len() + 1);
        let mut acc = vec![C64::new(0.0, 0.0); n * n];
        sums.push(acc.clone());
        for (s, &ws) in w.iter().enumerate() {
            for i in 0..n {
                let ai = basis.mode(i).amplitude()[s].conj() * ws;
                for j in 0..n {
                    acc[i * n + j] += ai * basis.mode(j).amplitude()[s];
                }
            }
            sums.push(acc.clone());
        }
        Self { n, sums }
    }

    /// Singular values of the renormalized modes restricted to samples
    /// `first..=last`; `None` if a mode has no support there.
    fn singular_values(&self, first: usize, last: usize) -> Option<Vec<f64>> {
        let (a, b) = (&self.sums[last + 1], &self.sums[first]);
        let n = self.n;
        let diag: Vec<f64> = (0..n).map(|i| (a[i * n + i] - b[i * n + i]).re).collect();
        if diag.iter().any(|&d| !(d > 0.0)) {
            return None;
        }
        let g = DMatrix::from_fn(n, n, |i, j| (a[i * n + j] - b[i * n + j]) / (diag[i] * diag[j]).sqrt());
        // real bases (Hermite-Gauss) take the cheaper symmetric solver
        let eig = if g.iter().all(|z| z.im == 0.0) {
            symmetric_eigen_desc(&g.map(|z| z.re)).ok()?.0.into_iter().rev().collect()
        } else {
            hermitian_eigenvalues(&g).ok()?
        };
        let mut sv: Vec<f64> = eig.iter().map(|e| e.max(0.0).sqrt()).collect();
        sv.reverse();
        Some(sv)
    }
}

/// Fit a clipping window to `target` singular values by least squares.
///
/// The window edges are searched on grid samples: a coarse scan over all
/// edge pairs bracketing the grid center, then a pattern search down to
/// single-sample steps. The report uses `threshold_fraction` for its rank.
pub fn fit_clipping_window(basis: &ModeBasis, target: &[f64], threshold_fraction: f64) -> Result<WindowFit> {
    if target.len() != basis.len() {
        return Err(Error::DimensionMismatch {
            expected: basis.len(),
            found: target.len(),
        });
    }
    let grid = basis.grid();
    let prefix = GramPrefix::new(basis);
    let n = grid.len();
    let center_idx = grid
        .points()
        .iter()
        .position(|&p| p >= grid.center())
        .unwrap_or(n / 2)
        .clamp(1, n - 2);

    let cost = |first: usize, last: usize| -> f64 {
        match prefix.singular_values(first, last) {
            Some(sv) => sv.iter().zip(target).map(|(s, t)| (s - t).powi(2)).sum(),
            None => f64::INFINITY,
        }
    };

    let stride = (n / 64).max(1);
    let mut best = (f64::INFINITY, 0, n - 1);
    for first in (0..center_idx).step_by(stride) {
        for last in (center_idx + 1..n).step_by(stride) {
            let c = cost(first, last);
            if c < best.0 {
                best = (c, first, last);
            }
        }
    }
    if !best.0.is_finite() {
        return Err(Error::Numerical("no window keeps every mode supported".into()));
    }

    let mut step = stride;
    loop {
        let mut improved = false;
        let (_, f0, l0) = best;
        let candidates = [
            (f0.checked_sub(step), Some(l0)),
            (Some(f0 + step), Some(l0)),
            (Some(f0), l0.checked_sub(step)),
            (Some(f0), Some(l0 + step)),
        ];
        for (f, l) in candidates {
            let (Some(f), Some(l)) = (f, l) else { continue };
            if f >= center_idx || l <= center_idx || l >= n {
                continue;
            }
            let c = cost(f, l);
            if c < best.0 {
                best = (c, f, l);
                improved = true;
            }
        }
        if !improved {
            if step == 1 {
                break;
            }
            step /= 2;
        }
    }

    let (residual, first, last) = best;
    let window = ClippingWindow::new(grid, grid.points()[first], grid.points()[last])?;
    let sv = prefix.singular_values(first, last).expect("finite cost implies support");
    Ok(WindowFit {
        window,
        residual,
        report: rank_report(sv, threshold_fraction),
    })
}
