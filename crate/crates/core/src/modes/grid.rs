use std::sync::Arc;

use crate::error::{Error, Result};

/// Speed of light in nm/ps.
pub const SPEED_OF_LIGHT_NM_PER_PS: f64 = 299_792.458;

/// Angular frequency (rad/ps) of light with vacuum wavelength `nm`.
pub fn wavelength_to_angular(nm: f64) -> f64 {
    2.0 * std::f64::consts::PI * SPEED_OF_LIGHT_NM_PER_PS / nm
}

/// |dω/dλ| in (rad/ps)/nm at wavelength `nm`.
pub fn angular_jacobian(nm: f64) -> f64 {
    2.0 * std::f64::consts::PI * SPEED_OF_LIGHT_NM_PER_PS / (nm * nm)
}

/// A uniform sampling axis in wavelength (nm).
///
/// Cloning is cheap; grids are shared between all modes defined on them.
#[derive(Clone, Debug)]
pub struct FrequencyGrid(Arc<GridData>);

#[derive(Debug)]
struct GridData {
    points: Vec<f64>,
    center: f64,
    resolution: f64,
    weights: Vec<f64>,
}

impl FrequencyGrid {
    /// Wrap explicit sample points. Points must be strictly increasing and
    /// uniformly spaced to 1 part in 1e9.
    pub fn new(points: Vec<f64>, center: f64) -> Result<Self> {
        if points.len() < 2 {
            return Err(Error::InvalidGrid(format!(
                "need at least 2 points, got {}",
                points.len()
            )));
        }
        if points.iter().any(|p| !p.is_finite()) {
            return Err(Error::InvalidGrid("non-finite point".into()));
        }
        let n = points.len();
        let resolution = (points[n - 1] - points[0]) / (n - 1) as f64;
        if resolution <= 0.0 {
            return Err(Error::InvalidGrid("points must be strictly increasing".into()));
        }
        for w in points.windows(2) {
            let step = w[1] - w[0];
            if step <= 0.0 {
                return Err(Error::InvalidGrid("points must be strictly increasing".into()));
            }
            if ((step - resolution) / resolution).abs() > 1e-9 {
                return Err(Error::InvalidGrid(format!(
                    "non-uniform spacing: step {step} vs mean {resolution}"
                )));
            }
        }
        if !(points[0]..=points[n - 1]).contains(&center) {
            return Err(Error::InvalidGrid(format!(
                "center {center} outside [{}, {}]",
                points[0],
                points[n - 1]
            )));
        }
        let mut weights = vec![resolution; n];
        weights[0] = 0.5 * resolution;
        weights[n - 1] = 0.5 * resolution;
        Ok(Self(Arc::new(GridData {
            points,
            center,
            resolution,
            weights,
        })))
    }

    /// `n` points from `start` to `stop` inclusive.
    pub fn uniform(start: f64, stop: f64, n: usize, center: f64) -> Result<Self> {
        if n < 2 {
            return Err(Error::InvalidGrid(format!("need at least 2 points, got {n}")));
        }
        let step = (stop - start) / (n - 1) as f64;
        let points = (0..n).map(|i| start + step * i as f64).collect();
        Self::new(points, center)
    }

    /// Grid symmetric about `center`, covering at least `half_span` on each
    /// side with spacing `resolution`. The center is always a sample point.
    pub fn centered(center: f64, half_span: f64, resolution: f64) -> Result<Self> {
        if !(resolution > 0.0) || !(half_span > 0.0) {
            return Err(Error::InvalidGrid(format!(
                "half_span ({half_span}) and resolution ({resolution}) must be positive"
            )));
        }
        let m = (half_span / resolution - 1e-9).ceil() as i64;
        let points = (-m..=m).map(|k| center + resolution * k as f64).collect();
        Self::new(points, center)
    }

    pub fn points(&self) -> &[f64] {
        &self.0.points
    }

    /// Trapezoidal quadrature weights (nm).
    pub fn weights(&self) -> &[f64] {
        &self.0.weights
    }

    pub fn center(&self) -> f64 {
        self.0.center
    }

    pub fn resolution(&self) -> f64 {
        self.0.resolution
    }

    pub fn len(&self) -> usize {
        self.0.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.points.is_empty()
    }

    pub fn min(&self) -> f64 {
        self.0.points[0]
    }

    pub fn max(&self) -> f64 {
        *self.0.points.last().expect("grid has at least two points")
    }

    /// Angular frequency of every sample in rad/ps.
    pub fn angular_frequencies(&self) -> Vec<f64> {
        self.points().iter().map(|&p| wavelength_to_angular(p)).collect()
    }

    /// Same span with `factor` times as many intervals.
    pub fn refined(&self, factor: usize) -> Result<Self> {
        let intervals = (self.len() - 1) * factor.max(1);
        Self::uniform(self.min(), self.max(), intervals + 1, self.center())
    }

    pub fn same_as(&self, other: &FrequencyGrid) -> bool {
        Arc::ptr_eq(&self.0, &other.0)
            || (self.0.points == other.0.points && self.0.center == other.0.center)
    }
}

impl PartialEq for FrequencyGrid {
    fn eq(&self, other: &Self) -> bool {
        self.same_as(other)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_degenerate_grids() {
        assert!(FrequencyGrid::new(vec![1.0], 1.0).is_err());
        assert!(FrequencyGrid::new(vec![2.0, 1.0], 1.5).is_err());
        assert!(FrequencyGrid::new(vec![1.0, 2.0, 3.5], 2.0).is_err());
        assert!(FrequencyGrid::new(vec![1.0, 2.0, 3.0], 5.0).is_err());
    }

    #[test]
    fn centered_grid_contains_center() {
        let g = FrequencyGrid::centered(1560.0, 10.0, 0.5).unwrap();
        assert_eq!(g.len(), 41);
        assert_eq!(g.points()[20], 1560.0);
        let total: f64 = g.weights().iter().sum();
        assert!((total - 20.0).abs() < 1e-12);
    }

    #[test]
    fn refinement_keeps_span() {
        let g = FrequencyGrid::uniform(0.0, 1.0, 11, 0.5).unwrap();
        let r = g.refined(2).unwrap();
        assert_eq!(r.len(), 21);
        assert_eq!(r.max(), 1.0);
    }

    #[test]
    fn angular_conversion() {
        let w = wavelength_to_angular(1560.0);
        assert!((w - 1207.4690).abs() < 1e-3);
        assert!((wavelength_to_angular(780.0) - 2.0 * w).abs() < 1e-9);
    }
}
