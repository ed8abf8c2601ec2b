//! Gaussian simulation of multimode squeezed light from a parametric
//! down-conversion source.
//!
//! Quadratures follow the vacuum-variance-1/2 convention (`[x, p] = i`) and
//! covariance matrices use xxpp ordering. Spectral axes are wavelengths in
//! nm.

pub mod calib;
pub mod cluster;
pub mod entanglement;
pub mod error;
pub mod gaussian;
pub mod linalg;
pub mod modes;
pub mod optim;
pub mod pipeline;
pub mod spdc;

pub use error::{Error, ErrorClass, Result};
