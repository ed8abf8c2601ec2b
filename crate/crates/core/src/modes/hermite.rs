use num_complex::Complex64 as C64;

use super::{FrequencyGrid, ModeBasis, SpectralMode};
use crate::error::{Error, Result};

/// HG_{count-1} must fall below this fraction of its peak at the grid edges,
/// otherwise the basis carries a truncation warning.
pub const EDGE_AMPLITUDE_LIMIT: f64 = 1e-6;

/// Normalized Hermite functions `psi_0(t) ..= psi_max(t)`, where
/// `psi_k(t) = H_k(t) exp(-t^2/2) / sqrt(2^k k! sqrt(pi))` with physicists'
/// polynomials `H_k`. Evaluated by the stable three-term recurrence, so no
/// factorials or large powers appear.
pub fn hermite_functions(max_order: usize, t: f64) -> Vec<f64> {
    let mut out = Vec::with_capacity(max_order + 1);
    let psi0 = std::f64::consts::PI.powf(-0.25) * (-0.5 * t * t).exp();
    out.push(psi0);
    if max_order == 0 {
        return out;
    }
    out.push(std::f64::consts::SQRT_2 * t * psi0);
    for k in 1..max_order {
        let kf = k as f64;
        let next = (2.0 / (kf + 1.0)).sqrt() * t * out[k] - (kf / (kf + 1.0)).sqrt() * out[k - 1];
        out.push(next);
    }
    out
}

/// Single normalized Hermite function `psi_k(t)`.
pub fn hermite_function(order: usize, t: f64) -> f64 {
    hermite_functions(order, t)[order]
}

/// Dimensionless coordinate for a Gaussian whose amplitude falls to 1/e at
/// `center ± width/2`.
fn scaled_coordinate(lambda: f64, center: f64, width: f64) -> f64 {
    2.0 * std::f64::consts::SQRT_2 * (lambda - center) / width
}

fn check_params(grid: &FrequencyGrid, width: f64) -> Result<()> {
    if grid.len() < 2 {
        return Err(Error::InvalidGrid("need at least 2 points".into()));
    }
    if !(width > 0.0) {
        return Err(Error::OutOfRange(format!("HG0 width must be positive, got {width}")));
    }
    Ok(())
}

/// Mode `order` of the Hermite-Gauss family, normalized on the grid.
pub fn hermite_gauss_mode(
    grid: &FrequencyGrid,
    center: f64,
    width_hg0: f64,
    order: usize,
) -> Result<SpectralMode> {
    check_params(grid, width_hg0)?;
    let amp: Vec<f64> = grid
        .points()
        .iter()
        .map(|&l| hermite_function(order, scaled_coordinate(l, center, width_hg0)))
        .collect();
    SpectralMode::from_real(grid, &amp)
}

/// First `count` Hermite-Gauss modes.
///
/// `width_hg0` is the full width (nm) at which the HG0 amplitude drops to
/// 1/e. Every mode is real and normalized on the grid; mode `k` has `k`
/// nodes.
pub fn hermite_gauss_basis(
    grid: &FrequencyGrid,
    center: f64,
    width_hg0: f64,
    count: usize,
) -> Result<ModeBasis> {
    check_params(grid, width_hg0)?;
    if count == 0 {
        return Err(Error::OutOfRange("count must be at least 1".into()));
    }
    let columns: Vec<Vec<f64>> = grid
        .points()
        .iter()
        .map(|&l| hermite_functions(count - 1, scaled_coordinate(l, center, width_hg0)))
        .collect();
    let modes = (0..count)
        .map(|k| {
            let amp: Vec<f64> = columns.iter().map(|c| c[k]).collect();
            SpectralMode::from_real(grid, &amp)
        })
        .collect::<Result<Vec<_>>>()?;

    let last = &modes[count - 1];
    let peak = last.amplitude().iter().map(|a| a.norm()).fold(0.0, f64::max);
    let edge = last.amplitude()[0].norm().max(last.amplitude()[grid.len() - 1].norm());

    let label = format!("hermite-gauss-{count}");
    // A truncating grid breaks orthogonality; degrade to a flagged basis then.
    let mut basis = match ModeBasis::orthonormal(label.clone(), modes.clone()) {
        Ok(b) => b,
        Err(Error::NotOrthonormal { deviation }) => ModeBasis::non_orthogonal(label, modes)?
            .with_warning(format!("modes not orthonormal on this grid (deviation {deviation:.2e})")),
        Err(e) => return Err(e),
    }
    .with_convention("center_nm", center)
        .with_convention("width_hg0_nm", width_hg0)
        .with_convention("width_is_full_1_over_e_amplitude", 1.0);
    if edge >= EDGE_AMPLITUDE_LIMIT * peak {
        basis = basis.with_warning(format!(
            "grid too narrow: HG{} edge amplitude is {:.2e} of peak",
            count - 1,
            edge / peak
        ));
    }
    Ok(basis)
}

/// HG0 width (full 1/e amplitude width, nm) best matching `mode` about
/// `center`, and the achieved overlap magnitude.
pub fn fit_hg0_width(mode: &SpectralMode, center: f64) -> Result<(f64, f64)> {
    let grid = mode.grid();
    let overlap = |w: f64| -> f64 {
        let amp: Vec<C64> = grid
            .points()
            .iter()
            .map(|&l| C64::new(hermite_function(0, scaled_coordinate(l, center, w)), 0.0))
            .collect();
        match SpectralMode::normalized(grid, amp) {
            Ok(hg) => hg.inner(mode).norm() / mode.norm(),
            Err(_) => 0.0,
        }
    };
    let lo = 4.0 * grid.resolution();
    let hi = grid.max() - grid.min();
    let (w, v) = crate::optim::maximize_scalar(overlap, lo, hi, 200, 1e-6)?;
    Ok((w, v))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn wide_grid() -> FrequencyGrid {
        FrequencyGrid::centered(1560.0, 250.0, 0.25).unwrap()
    }

    #[test]
    fn single_mode_is_normalized_gaussian() {
        let g = wide_grid();
        let b = hermite_gauss_basis(&g, 1560.0, 45.0, 1).unwrap();
        assert_eq!(b.len(), 1);
        assert!((b.mode(0).norm() - 1.0).abs() < 1e-12);
        assert_eq!(b.mode(0).sign_changes(1e-10), 0);
        assert!(b.warnings().is_empty());
    }

    #[test]
    fn width_convention_is_one_over_e_amplitude() {
        let g = wide_grid();
        let m = hermite_gauss_mode(&g, 1560.0, 45.0, 0).unwrap();
        let peak = m.amplitude()[g.len() / 2].re;
        let idx = g.points().iter().position(|&p| (p - 1582.5).abs() < 1e-9).unwrap();
        assert!((m.amplitude()[idx].re / peak - (-1.0f64).exp()).abs() < 1e-12);
    }

    #[test]
    fn twenty_one_modes_orthonormal_with_k_nodes() {
        let g = wide_grid();
        let b = hermite_gauss_basis(&g, 1560.0, 45.0, 21).unwrap();
        assert_eq!(b.len(), 21);
        assert!(b.orthonormality_deviation() < 1e-10);
        for (k, m) in b.modes().iter().enumerate() {
            assert_eq!(m.sign_changes(1e-10), k, "mode {k}");
        }
        assert!(b.warnings().is_empty());
    }

    #[test]
    fn narrow_grid_warns() {
        let g = FrequencyGrid::centered(1560.0, 60.0, 0.25).unwrap();
        let b = hermite_gauss_basis(&g, 1560.0, 45.0, 21).unwrap();
        assert!(!b.warnings().is_empty());
        assert!(!b.is_orthonormal());
    }

    #[test]
    fn rejects_bad_params() {
        let g = wide_grid();
        assert!(hermite_gauss_basis(&g, 1560.0, 0.0, 3).is_err());
        assert!(hermite_gauss_basis(&g, 1560.0, 45.0, 0).is_err());
    }

    #[test]
    fn width_fit_recovers_hg0() {
        let g = wide_grid();
        let m = hermite_gauss_mode(&g, 1560.0, 37.0, 0).unwrap();
        let (w, ov) = fit_hg0_width(&m, 1560.0).unwrap();
        assert!((w - 37.0).abs() < 1e-3, "{w}");
        assert!(ov > 1.0 - 1e-9);
    }
}
