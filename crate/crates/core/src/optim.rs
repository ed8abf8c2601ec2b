//! One-dimensional scan + golden-section search and bisection.

use crate::error::{Error, Result};

const INV_PHI: f64 = 0.618_033_988_749_894_8;

/// Minimize `f` on `[lo, hi]`: a uniform scan of `scan_points` samples
/// brackets the minimum, golden-section search refines it to `x_tol`.
///
/// Fails with [`Error::NoBracket`] when the best scan sample sits on an
/// endpoint, i.e. the minimum is not interior.
pub fn minimize_scalar<F>(f: F, lo: f64, hi: f64, scan_points: usize, x_tol: f64) -> Result<(f64, f64)>
where
    F: Fn(f64) -> f64,
{
    if !(hi > lo) || scan_points < 3 {
        return Err(Error::NoBracket(format!("empty search interval [{lo}, {hi}]")));
    }
    let step = (hi - lo) / (scan_points - 1) as f64;
    let values: Vec<f64> = (0..scan_points).map(|i| f(lo + step * i as f64)).collect();
    let best = values
        .iter()
        .enumerate()
        .filter(|(_, v)| v.is_finite())
        .min_by(|a, b| a.1.total_cmp(b.1))
        .map(|(i, _)| i)
        .ok_or_else(|| Error::NoBracket("objective not finite anywhere".into()))?;
    if best == 0 || best == scan_points - 1 {
        return Err(Error::NoBracket(format!(
            "minimum at boundary x = {}",
            lo + step * best as f64
        )));
    }
    let (mut a, mut b) = (lo + step * (best - 1) as f64, lo + step * (best + 1) as f64);
    let mut c = b - INV_PHI * (b - a);
    let mut d = a + INV_PHI * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    while (b - a).abs() > x_tol {
        if fc <= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - INV_PHI * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + INV_PHI * (b - a);
            fd = f(d);
        }
    }
    let x = 0.5 * (a + b);
    let fx = f(x);
    let scan_best = values[best];
    // Piecewise-constant objectives can leave the refined point no better
    // than the scan sample.
    if scan_best < fx {
        Ok((lo + step * best as f64, scan_best))
    } else {
        Ok((x, fx))
    }
}

/// Maximize `f`; see [`minimize_scalar`].
pub fn maximize_scalar<F>(f: F, lo: f64, hi: f64, scan_points: usize, x_tol: f64) -> Result<(f64, f64)>
where
    F: Fn(f64) -> f64,
{
    let (x, v) = minimize_scalar(|x| -f(x), lo, hi, scan_points, x_tol)?;
    Ok((x, -v))
}

/// Root of `f` on `[lo, hi]` by bisection; `f(lo)` and `f(hi)` must differ in sign.
pub fn bisect<F>(f: F, mut lo: f64, mut hi: f64, x_tol: f64, max_iter: usize) -> Result<f64>
where
    F: Fn(f64) -> Result<f64>,
{
    let mut flo = f(lo)?;
    let fhi = f(hi)?;
    if flo == 0.0 {
        return Ok(lo);
    }
    if fhi == 0.0 {
        return Ok(hi);
    }
    if flo.signum() == fhi.signum() {
        return Err(Error::NoBracket(format!(
            "no sign change on [{lo}, {hi}] (f = {flo}, {fhi})"
        )));
    }
    for _ in 0..max_iter {
        let mid = 0.5 * (lo + hi);
        let fm = f(mid)?;
        if fm == 0.0 || (hi - lo).abs() < x_tol {
            return Ok(mid);
        }
        if fm.signum() == flo.signum() {
            lo = mid;
            flo = fm;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn finds_parabola_minimum() {
        let (x, v) = minimize_scalar(|x| (x - 1.3).powi(2) + 2.0, 0.0, 5.0, 50, 1e-10).unwrap();
        assert!((x - 1.3).abs() < 1e-6);
        assert!((v - 2.0).abs() < 1e-12);
    }

    #[test]
    fn boundary_minimum_is_not_bracketed() {
        assert!(matches!(
            minimize_scalar(|x| x, 0.0, 1.0, 20, 1e-6),
            Err(Error::NoBracket(_))
        ));
    }

    #[test]
    fn bisection_root() {
        let r = bisect(|x| Ok(x * x - 2.0), 0.0, 2.0, 1e-14, 200).unwrap();
        assert!((r - 2f64.sqrt()).abs() < 1e-12);
        assert!(bisect(|x| Ok(x * x + 1.0), 0.0, 2.0, 1e-6, 100).is_err());
    }
}
