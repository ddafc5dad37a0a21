//! The joint Gaussian model over user sites and grid sites.
//!
//! Site ordering is fixed: users first (indices `0..n_users`), then grid
//! sites row-major. All subset indices refer to this ordering.

use nalgebra::{Cholesky, DMatrix, DVector};

use crate::geo::{KernelSpec, Location};
use crate::ModelError;

/// Maximum number of user sites; subsets are stored as `u64` bitmasks.
pub const MAX_USERS: usize = 64;

/// A sorted set of user-site indices (a subset of S), stored as a bitmask.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub struct SiteSubset(u64);

impl SiteSubset {
    pub const EMPTY: SiteSubset = SiteSubset(0);

    pub fn from_mask(mask: u64) -> Self {
        SiteSubset(mask)
    }

    pub fn singleton(i: usize) -> Self {
        assert!(i < MAX_USERS);
        SiteSubset(1 << i)
    }

    pub fn full(n: usize) -> Self {
        assert!(n <= MAX_USERS);
        if n == 64 {
            SiteSubset(u64::MAX)
        } else {
            SiteSubset((1u64 << n) - 1)
        }
    }

    pub fn mask(&self) -> u64 {
        self.0
    }

    pub fn len(&self) -> usize {
        self.0.count_ones() as usize
    }

    pub fn is_empty(&self) -> bool {
        self.0 == 0
    }

    pub fn contains(&self, i: usize) -> bool {
        i < MAX_USERS && self.0 >> i & 1 == 1
    }

    #[must_use]
    pub fn with(&self, i: usize) -> Self {
        assert!(i < MAX_USERS);
        SiteSubset(self.0 | 1 << i)
    }

    #[must_use]
    pub fn without(&self, i: usize) -> Self {
        assert!(i < MAX_USERS);
        SiteSubset(self.0 & !(1 << i))
    }

    pub fn union(&self, other: &SiteSubset) -> Self {
        SiteSubset(self.0 | other.0)
    }

    pub fn is_subset_of(&self, other: &SiteSubset) -> bool {
        self.0 & !other.0 == 0
    }

    /// Member indices in ascending order.
    pub fn iter(&self) -> impl Iterator<Item = usize> + '_ {
        (0..MAX_USERS).filter(move |&i| self.contains(i))
    }

    pub fn members(&self) -> Vec<usize> {
        self.iter().collect()
    }
}

impl FromIterator<usize> for SiteSubset {
    fn from_iter<T: IntoIterator<Item = usize>>(iter: T) -> Self {
        let mut s = SiteSubset::EMPTY;
        for i in iter {
            s = s.with(i);
        }
        s
    }
}

/// The joint Gaussian model over `V = S ∪ U`.
///
/// Immutable after construction; all operations are pure functions of
/// their inputs and safe to call from concurrent readers.
#[derive(Debug, Clone)]
pub struct SiteField {
    user_sites: Vec<(Location, f64)>,
    grid_sites: Vec<Location>,
    kernel: KernelSpec,
    /// Exact covariance entries (no jitter): diagonal `K(0)` on U,
    /// `K(0) + σ²_ε` on S, off-diagonal `K(‖x_i − x_j‖)`.
    cov: DMatrix<f64>,
    /// Inverse of the jittered covariance.
    prec: DMatrix<f64>,
    /// Diagonal jitter actually applied.
    jitter: f64,
}

/// Builds the joint covariance over users and grid sites.
///
/// Noise variances enter user-site diagonals only. A diagonal jitter of
/// `1e-8·K(0)` is added before factorization, escalating ×10 up to
/// `1e-4·K(0)`; if the matrix still cannot be factored the closest site
/// pair is reported.
pub fn build_covariance(
    user_sites: Vec<(Location, f64)>,
    grid_sites: Vec<Location>,
    kernel: KernelSpec,
) -> Result<SiteField, ModelError> {
    assert!(user_sites.len() <= MAX_USERS, "at most {MAX_USERS} users");
    for (_, nv) in &user_sites {
        assert!(*nv >= 0.0 && nv.is_finite(), "noise variance must be ≥ 0");
    }
    let n = user_sites.len();
    let total = n + grid_sites.len();
    // Coincident sites make MI between them ill-defined regardless of
    // jitter; reject them up front rather than after factorization.
    {
        let (a, b, d) = closest_pair(&user_sites, &grid_sites);
        if total > 1 && d < 1e-9 {
            return Err(ModelError::Degenerate {
                site_a: a,
                site_b: b,
                distance_km: d,
            });
        }
    }
    let loc = |i: usize| -> &Location {
        if i < n {
            &user_sites[i].0
        } else {
            &grid_sites[i - n]
        }
    };

    let mut cov = DMatrix::zeros(total, total);
    for i in 0..total {
        for j in 0..=i {
            let c = kernel.cov(loc(i), loc(j));
            cov[(i, j)] = c;
            cov[(j, i)] = c;
        }
    }
    for (i, (_, nv)) in user_sites.iter().enumerate() {
        cov[(i, i)] += nv;
    }

    let mut jitter = 1e-8 * kernel.sill;
    loop {
        let mut m = cov.clone();
        for i in 0..total {
            m[(i, i)] += jitter;
        }
        if let Some(chol) = Cholesky::new(m) {
            let prec = chol.inverse();
            return Ok(SiteField {
                user_sites,
                grid_sites,
                kernel,
                cov,
                prec,
                jitter,
            });
        }
        jitter *= 10.0;
        if jitter > 1e-4 * kernel.sill {
            let (a, b, d) = closest_pair(&user_sites, &grid_sites);
            return Err(ModelError::Degenerate {
                site_a: a,
                site_b: b,
                distance_km: d,
            });
        }
    }
}

fn closest_pair(users: &[(Location, f64)], grid: &[Location]) -> (usize, usize, f64) {
    let locs: Vec<&Location> = users
        .iter()
        .map(|(l, _)| l)
        .chain(grid.iter())
        .collect();
    let mut best = (0, 0, f64::INFINITY);
    for i in 0..locs.len() {
        for j in 0..i {
            let d = locs[i].distance(locs[j]);
            if d < best.2 {
                best = (j, i, d);
            }
        }
    }
    best
}

impl SiteField {
    pub fn n_users(&self) -> usize {
        self.user_sites.len()
    }

    pub fn n_grid(&self) -> usize {
        self.grid_sites.len()
    }

    pub fn n_total(&self) -> usize {
        self.n_users() + self.n_grid()
    }

    pub fn kernel(&self) -> &KernelSpec {
        &self.kernel
    }

    pub fn jitter(&self) -> f64 {
        self.jitter
    }

    pub fn user_sites(&self) -> &[(Location, f64)] {
        &self.user_sites
    }

    pub fn grid_sites(&self) -> &[Location] {
        &self.grid_sites
    }

    pub fn location(&self, i: usize) -> &Location {
        if i < self.n_users() {
            &self.user_sites[i].0
        } else {
            &self.grid_sites[i - self.n_users()]
        }
    }

    /// Covariance matrix entry (exact, no jitter).
    pub fn cov(&self, i: usize, j: usize) -> f64 {
        self.cov[(i, j)]
    }

    /// Jittered submatrix over the given site indices.
    fn sub(&self, idx: &[usize]) -> DMatrix<f64> {
        let k = idx.len();
        let mut m = DMatrix::zeros(k, k);
        for (a, &i) in idx.iter().enumerate() {
            for (b, &j) in idx.iter().enumerate() {
                m[(a, b)] = self.cov[(i, j)];
            }
            m[(a, a)] += self.jitter;
        }
        m
    }

    fn prec_sub(&self, idx: &[usize]) -> DMatrix<f64> {
        let k = idx.len();
        let mut m = DMatrix::zeros(k, k);
        for (a, &i) in idx.iter().enumerate() {
            for (b, &j) in idx.iter().enumerate() {
                m[(a, b)] = self.prec[(i, j)];
            }
        }
        m
    }

    fn chol(&self, idx: &[usize], context: &str) -> Result<Cholesky<f64, nalgebra::Dyn>, ModelError> {
        Cholesky::new(self.sub(idx)).ok_or_else(|| ModelError::NumericalDegenerate {
            context: context.to_string(),
        })
    }

    /// Posterior variance `σ²_{target|given}` from the Schur complement.
    ///
    /// Independent of any measured values by construction.
    pub fn conditional_variance(
        &self,
        target: usize,
        given: &SiteSubset,
    ) -> Result<f64, ModelError> {
        assert!(target < self.n_total());
        assert!(!given.contains(target), "target must not be conditioned on");
        if given.is_empty() {
            return Ok(self.cov[(target, target)]);
        }
        let idx = given.members();
        let chol = self.chol(&idx, "conditional_variance")?;
        let cross = DVector::from_iterator(idx.len(), idx.iter().map(|&j| self.cov[(j, target)]));
        let solved = chol.solve(&cross);
        Ok(self.cov[(target, target)] - cross.dot(&solved))
    }

    /// Posterior mean at `target` from measurements at `given`, with the
    /// zero-mean convention.
    pub fn conditional_mean(
        &self,
        target: usize,
        given: &SiteSubset,
        measurements: &[f64],
    ) -> Result<f64, ModelError> {
        assert!(target < self.n_total());
        assert!(!given.contains(target));
        assert_eq!(measurements.len(), given.len(), "one measurement per given site");
        if given.is_empty() {
            return Ok(0.0);
        }
        let idx = given.members();
        let chol = self.chol(&idx, "conditional_mean")?;
        let z = DVector::from_column_slice(measurements);
        let solved = chol.solve(&z);
        let cross = DVector::from_iterator(idx.len(), idx.iter().map(|&j| self.cov[(j, target)]));
        Ok(cross.dot(&solved))
    }

    /// Differential entropy of the marginal over `sites ⊆ V`, in nats:
    /// `½k·ln(2πe) + ½·log|Σ_sites|`.
    pub fn gaussian_entropy(&self, sites: &[usize]) -> Result<f64, ModelError> {
        assert!(!sites.is_empty(), "entropy of an empty set is undefined");
        let chol = self.chol(sites, "gaussian_entropy")?;
        let logdet = 2.0 * chol.l().diagonal().iter().map(|d| d.ln()).sum::<f64>();
        let k = sites.len() as f64;
        Ok(0.5 * k * (2.0 * std::f64::consts::PI * std::f64::consts::E).ln() + 0.5 * logdet)
    }

    /// `MI(A) = H(Z_{V∖A}) + H(Z_A) − H(Z_V)` in nats.
    ///
    /// Evaluated as `½(log|Σ_AA| + log|(Σ⁻¹)_AA|)`, which is the same
    /// quantity by the block-inverse determinant identity but costs
    /// O(|A|³) per query instead of O(|V|³).
    pub fn mutual_information(&self, a: &SiteSubset) -> Result<f64, ModelError> {
        assert!(
            a.iter().all(|i| i < self.n_users()),
            "A must be a subset of S"
        );
        if a.is_empty() || a.len() == self.n_total() {
            return Ok(0.0);
        }
        let idx = a.members();
        let chol = self.chol(&idx, "mutual_information")?;
        let logdet_a = 2.0 * chol.l().diagonal().iter().map(|d| d.ln()).sum::<f64>();
        let pchol = Cholesky::new(self.prec_sub(&idx)).ok_or_else(|| {
            ModelError::NumericalDegenerate {
                context: "mutual_information precision block".to_string(),
            }
        })?;
        let logdet_p = 2.0 * pchol.l().diagonal().iter().map(|d| d.ln()).sum::<f64>();
        Ok(0.5 * (logdet_a + logdet_p))
    }

    /// Marginal MI of user `i` given `A`:
    /// `H(Z_i|Z_A) − H(Z_i|Z_{V∖(A∪{i})})`.
    pub fn marginal_mi(&self, i: usize, a: &SiteSubset) -> Result<f64, ModelError> {
        assert!(i < self.n_users() && !a.contains(i), "i must be in S∖A");
        // Jitter the target diagonal so both routes live on the same
        // (jittered) field; otherwise the chain rule drifts at ~jitter/σ².
        let var_given_a = self.conditional_variance(i, a)? + self.jitter;
        // Conditional covariance of the block T = A∪{i} given the rest of V
        // is (P_TT)⁻¹; its (i,i) entry is σ²_{i|V∖T}.
        let t = a.with(i);
        let idx = t.members();
        let pos = idx.iter().position(|&j| j == i).unwrap();
        let pchol = Cholesky::new(self.prec_sub(&idx)).ok_or_else(|| {
            ModelError::NumericalDegenerate {
                context: "marginal_mi precision block".to_string(),
            }
        })?;
        let inv = pchol.inverse();
        let var_given_rest = inv[(pos, pos)];
        Ok(0.5 * (var_given_a.ln() - var_given_rest.ln()))
    }
}
