use thiserror::Error;

/// Errors raised by the spatial model and its numerical kernels.
#[derive(Debug, Error)]
pub enum ModelError {
    /// The joint covariance could not be factored even after escalating
    /// jitter. Reports the closest pair of sites, which is almost always
    /// the culprit.
    #[error(
        "covariance not positive definite after maximum jitter; \
         closest sites {site_a} and {site_b} are {distance_km:.6} km apart"
    )]
    Degenerate {
        site_a: usize,
        site_b: usize,
        distance_km: f64,
    },

    /// A conditioning submatrix turned out singular after jitter.
    #[error("singular conditioning submatrix ({context})")]
    NumericalDegenerate { context: String },

    /// Exhaustive enumeration was requested past the guard.
    #[error("enumeration guard exceeded: n = {n} > {guard}")]
    EnumerationGuard { n: usize, guard: usize },

    /// An offer or measurement referenced a user the model does not know.
    #[error("unknown user id {0}")]
    UnknownUser(usize),
}
