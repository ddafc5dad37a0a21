//! Private sensing-cost distributions on `[lower, lower + width]`.

use rand::Rng;
use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal};

/// Supported cost distribution families.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CostKind {
    Uniform,
    TruncatedNormal,
}

/// A user's private-cost law on `[lower, lower + width]`.
///
/// The truncated normal is `N(lower, (width/3)²)` restricted to the
/// support, so most of the mass sits near the minimum energy cost.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CostDistribution {
    pub kind: CostKind,
    pub lower: f64,
    pub width: f64,
}

impl CostDistribution {
    pub fn new(kind: CostKind, lower: f64, width: f64) -> Self {
        assert!(lower > 0.0, "lower must be positive");
        assert!(width > 0.0, "width must be positive");
        CostDistribution { kind, lower, width }
    }

    pub fn uniform(lower: f64, width: f64) -> Self {
        Self::new(CostKind::Uniform, lower, width)
    }

    pub fn truncated_normal(lower: f64, width: f64) -> Self {
        Self::new(CostKind::TruncatedNormal, lower, width)
    }

    /// Upper end of the support, `c̄ = lower + width`.
    pub fn upper(&self) -> f64 {
        self.lower + self.width
    }

    /// CDF, clamped to [0, 1] outside the support.
    pub fn cdf(&self, c: f64) -> f64 {
        if c <= self.lower {
            return 0.0;
        }
        if c >= self.upper() {
            return 1.0;
        }
        match self.kind {
            CostKind::Uniform => (c - self.lower) / self.width,
            CostKind::TruncatedNormal => {
                let std = Normal::standard();
                let z = (c - self.lower) / (self.width / 3.0);
                (std.cdf(z) - 0.5) / (std.cdf(3.0) - 0.5)
            }
        }
    }

    /// Inverse CDF; the unique `c` in the support with `cdf(c) = gamma`.
    pub fn inv_cdf(&self, gamma: f64) -> f64 {
        assert!((0.0..=1.0).contains(&gamma), "gamma must be in [0, 1]");
        if gamma <= 0.0 {
            return self.lower;
        }
        if gamma >= 1.0 {
            return self.upper();
        }
        match self.kind {
            CostKind::Uniform => self.lower + gamma * self.width,
            // Bisection on the CDF keeps the interface uniform across kinds
            // and avoids inverse-erf accuracy concerns.
            CostKind::TruncatedNormal => {
                let mut lo = self.lower;
                let mut hi = self.upper();
                while hi - lo > 1e-12 {
                    let mid = 0.5 * (lo + hi);
                    if self.cdf(mid) < gamma {
                        lo = mid;
                    } else {
                        hi = mid;
                    }
                }
                0.5 * (lo + hi)
            }
        }
    }

    /// Inverse-CDF sampling: one uniform variate per draw, so mechanism
    /// comparisons sharing an RNG stream see identical realizations
    /// regardless of kind.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        self.inv_cdf(rng.gen::<f64>())
    }
}
