use num_complex::Complex64 as C64;

use super::{ModeBasis, SpectralMode};
use crate::error::{Error, Result};
use crate::optim::minimize_scalar;

/// Piecewise-constant amplitude with `order + 1` equal-width segments of
/// alternating sign over `[-half_width, half_width]` (offsets from the
/// center). The rightmost segment is positive, like the leading lobe of
/// HG_order, and `f(-x) = (-1)^order f(x)`.
fn flat_profile(offsets: &[f64], order: usize, half_width: f64) -> Vec<f64> {
    let seg = 2.0 * half_width / (order + 1) as f64;
    let parity = if order % 2 == 0 { 1.0 } else { -1.0 };
    offsets
        .iter()
        .map(|&x| {
            let ax = x.abs();
            if ax > half_width {
                return 0.0;
            }
            if ax == 0.0 && order % 2 == 1 {
                return 0.0;
            }
            let from_right = (((half_width - ax) / seg).floor() as usize).min(order);
            let right = if from_right % 2 == 0 { 1.0 } else { -1.0 };
            if x >= 0.0 {
                right
            } else {
                parity * right
            }
        })
        .collect()
}

/// Piecewise-constant counterparts of the first `count` modes of `hg`.
///
/// Mode `k` has `k + 1` equal-width segments of alternating sign placed
/// symmetrically about the center; the only free parameter, the total
/// half-width, minimizes the L2 distance to HG_k. The result is then
/// Gram-Schmidt orthonormalized in index order.
///
/// `hg` must be orthonormal and carry a `center_nm` convention (as produced
/// by [`super::hermite_gauss_basis`]).
pub fn flat_basis(hg: &ModeBasis, count: usize) -> Result<ModeBasis> {
    if count == 0 || count > hg.len() {
        return Err(Error::OutOfRange(format!(
            "flat basis of {count} modes from {} HG modes",
            hg.len()
        )));
    }
    if !hg.is_orthonormal() {
        return Err(Error::InvalidMode("flat modes need an orthonormal HG basis".into()));
    }
    let grid = hg.grid();
    let center = hg.convention("center_nm").unwrap_or_else(|| grid.center());
    let offsets: Vec<f64> = grid.points().iter().map(|&p| p - center).collect();
    let max_half = (grid.max() - center).min(center - grid.min());

    let mut out: Vec<SpectralMode> = Vec::with_capacity(count);
    let mut half_widths = Vec::with_capacity(count);
    for k in 0..count {
        let target = hg.mode(k);
        let lo = grid.resolution() * (k + 1) as f64;
        let distance = |w: f64| -> f64 {
            match SpectralMode::from_real(grid, &flat_profile(&offsets, k, w)) {
                // |f - h|^2 = 2 - 2 Re<f, h> for unit vectors
                Ok(f) => 2.0 - 2.0 * f.inner(target).re,
                Err(_) => f64::INFINITY,
            }
        };
        let (w, _) = minimize_scalar(distance, lo, max_half, 400, 1e-3 * grid.resolution())?;
        half_widths.push(w);

        let mut amp: Vec<C64> = flat_profile(&offsets, k, w)
            .into_iter()
            .map(|a| C64::new(a, 0.0))
            .collect();
        for prev in &out {
            let proj = SpectralMode::unnormalized(grid, amp.clone())?;
            let c = prev.inner(&proj);
            for (a, p) in amp.iter_mut().zip(prev.amplitude()) {
                *a -= c * p;
            }
        }
        out.push(SpectralMode::normalized(grid, amp)?);
    }

    let mut basis = ModeBasis::orthonormal(format!("flat-{count}"), out)?.with_convention("center_nm", center);
    for (k, w) in half_widths.iter().enumerate() {
        basis = basis.with_convention(format!("half_width_{k}_nm"), *w);
    }
    Ok(basis)
}
