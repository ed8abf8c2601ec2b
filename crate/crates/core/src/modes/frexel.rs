use num_complex::Complex64 as C64;

use super::{FrequencyGrid, ModeBasis, SpectralMode};
use crate::error::{Error, Result};

/// `bands` top-hat modes on equal, disjoint sub-intervals of `span` (nm).
///
/// Band `j` covers `[lo + j w, lo + (j+1) w)`; the last band also includes
/// `hi`. Every band must contain at least two grid samples.
pub fn frexel_basis(grid: &FrequencyGrid, span: (f64, f64), bands: usize) -> Result<ModeBasis> {
    let (lo, hi) = span;
    if !(lo < hi) || lo < grid.min() || hi > grid.max() {
        return Err(Error::InvalidWindow {
            lo,
            hi,
            reason: format!("span must be increasing and inside [{}, {}]", grid.min(), grid.max()),
        });
    }
    if bands < 2 {
        return Err(Error::OutOfRange(format!("need at least 2 bands, got {bands}")));
    }
    let width = (hi - lo) / bands as f64;
    let band_of = |p: f64| -> Option<usize> {
        if p < lo || p > hi {
            return None;
        }
        Some((((p - lo) / width).floor() as usize).min(bands - 1))
    };

    let mut amps = vec![vec![C64::new(0.0, 0.0); grid.len()]; bands];
    let mut counts = vec![0usize; bands];
    for (i, &p) in grid.points().iter().enumerate() {
        if let Some(j) = band_of(p) {
            amps[j][i] = C64::new(1.0, 0.0);
            counts[j] += 1;
        }
    }
    if counts.iter().any(|&c| c < 2) {
        return Err(Error::UnderResolved {
            width_nm: width,
            resolution_nm: grid.resolution(),
        });
    }
    let modes = amps
        .into_iter()
        .map(|a| SpectralMode::normalized(grid, a))
        .collect::<Result<Vec<_>>>()?;
    Ok(ModeBasis::orthonormal(format!("frexel-{bands}"), modes)?
        .with_convention("span_lo_nm", lo)
        .with_convention("span_hi_nm", hi)
        .with_convention("band_width_nm", width))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid() -> FrequencyGrid {
        FrequencyGrid::centered(1560.0, 60.0, 0.1).unwrap()
    }

    #[test]
    fn eight_bands_of_seven_nm() {
        let b = frexel_basis(&grid(), (1532.0, 1588.0), 8).unwrap();
        assert_eq!(b.len(), 8);
        assert!((b.convention("band_width_nm").unwrap() - 7.0).abs() < 1e-12);
        for i in 0..8 {
            for j in 0..8 {
                if i != j {
                    assert_eq!(b.mode(i).inner(b.mode(j)).norm(), 0.0);
                }
            }
        }
    }

    #[test]
    fn two_bands_split_at_midpoint() {
        let g = grid();
        let b = frexel_basis(&g, (1550.0, 1570.0), 2).unwrap();
        for (i, &p) in g.points().iter().enumerate() {
            let left = b.mode(0).amplitude()[i].norm() > 0.0;
            let right = b.mode(1).amplitude()[i].norm() > 0.0;
            if (1550.0..1560.0 - 1e-9).contains(&p) {
                assert!(left && !right, "{p}");
            } else if p > 1560.0 + 1e-9 && p <= 1570.0 {
                assert!(right && !left, "{p}");
            }
        }
    }

    #[test]
    fn bands_partition_span() {
        let g = grid();
        let b = frexel_basis(&g, (1540.0, 1580.0), 5).unwrap();
        for (i, &p) in g.points().iter().enumerate() {
            let covered: usize = b.modes().iter().filter(|m| m.amplitude()[i].norm() > 0.0).count();
            let inside = (1540.0..=1580.0).contains(&p);
            assert_eq!(covered, usize::from(inside), "{p}");
        }
    }

    #[test]
    fn under_resolved_rejected() {
        let g = FrequencyGrid::centered(1560.0, 10.0, 1.0).unwrap();
        assert!(matches!(
            frexel_basis(&g, (1555.0, 1565.0), 8),
            Err(Error::UnderResolved { .. })
        ));
        assert!(frexel_basis(&g, (1555.0, 1575.0), 2).is_err());
    }
}
