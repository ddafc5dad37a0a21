//! Planar locations and the isotropic exponential kernel.

use serde::{Deserialize, Serialize};

/// A point in the plane, kilometers.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Location {
    pub x: f64,
    pub y: f64,
}

impl Location {
    pub fn new(x: f64, y: f64) -> Self {
        assert!(x.is_finite() && y.is_finite(), "non-finite coordinates");
        Location { x, y }
    }

    /// Euclidean distance in km.
    pub fn distance(&self, other: &Location) -> f64 {
        ((self.x - other.x).powi(2) + (self.y - other.y).powi(2)).sqrt()
    }
}

/// Isotropic exponential covariance kernel, `K(d) = sill · exp(−d / range)`.
///
/// `sill` is the shadowing variance at distance zero (dB²), `range` the
/// correlation length (km).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KernelSpec {
    pub sill: f64,
    pub range: f64,
}

impl KernelSpec {
    pub fn new(sill: f64, range: f64) -> Self {
        assert!(sill > 0.0, "sill must be positive");
        assert!(range > 0.0, "range must be positive");
        KernelSpec { sill, range }
    }

    pub fn eval(&self, d: f64) -> f64 {
        self.sill * (-d / self.range).exp()
    }

    /// Covariance between two locations.
    pub fn cov(&self, a: &Location, b: &Location) -> f64 {
        self.eval(a.distance(b))
    }
}
