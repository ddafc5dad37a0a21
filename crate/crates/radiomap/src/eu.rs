//! Pricing rule, recruit probabilities, expected utility / expected
//! value (exact and Monte-Carlo), the nonnegative shifted EU′ oracle,
//! and one-dimensional best-price optimization.

use rand::Rng;

use crate::cost::CostDistribution;
use crate::field::SiteSubset;
use crate::geo::Location;
use crate::rng::unit_uniform;
use crate::submodular::{SetFunctionOracle, ENUMERATION_GUARD};
use crate::valuation::{ConditionalValue, ValueFn};
use crate::ModelError;

/// One candidate user: location, hardware noise, private-cost law, and
/// the probability ρ that an offer reaches them before expiring.
#[derive(Debug, Clone, PartialEq)]
pub struct UserProfile {
    /// Index into the ground set; must equal the position in the user slice.
    pub id: usize,
    pub location: Location,
    /// Measurement noise variance, dB².
    pub noise_variance: f64,
    pub cost_dist: CostDistribution,
    /// Unexpired-offer probability, ρ ∈ (0, 1].
    pub rho: f64,
}

impl UserProfile {
    pub fn new(
        id: usize,
        location: Location,
        noise_variance: f64,
        cost_dist: CostDistribution,
        rho: f64,
    ) -> Self {
        assert!(rho > 0.0 && rho <= 1.0, "rho must lie in (0, 1]");
        UserProfile {
            id,
            location,
            noise_variance,
            cost_dist,
            rho,
        }
    }
}

/// A uniform desired recruit probability γ ∈ (0, 1] applied to a batch.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GammaPricing {
    pub gamma: f64,
}

impl GammaPricing {
    pub fn new(gamma: f64) -> Self {
        assert!(gamma > 0.0 && gamma <= 1.0, "gamma must lie in (0, 1]");
        GammaPricing { gamma }
    }
}

/// The price achieving recruit probability min(γ, ρ): `F⁻¹(min(γ/ρ, 1))`.
pub fn price_for_gamma(user: &UserProfile, gamma: f64) -> f64 {
    assert!(gamma > 0.0 && gamma <= 1.0);
    user.cost_dist.inv_cdf((gamma / user.rho).min(1.0))
}

/// Probability the offer is unexpired and accepted: `ρ·F(price)`.
pub fn recruit_prob(user: &UserProfile, price: f64) -> f64 {
    user.rho * user.cost_dist.cdf(price)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Offer {
    pub user: usize,
    pub price: f64,
}

/// A set of simultaneous offers with their recruit probabilities.
///
/// Prices above the cost support are clamped to c̄ (paying more cannot
/// raise acceptance); prices below c̲ stand as never-accepted probes.
#[derive(Debug, Clone, PartialEq)]
pub struct OfferBatch {
    offers: Vec<Offer>,
    recruit_probs: Vec<f64>,
}

impl OfferBatch {
    pub fn new(users: &[UserProfile], raw: impl IntoIterator<Item = (usize, f64)>) -> Self {
        let mut offers = Vec::new();
        let mut recruit_probs = Vec::new();
        for (user, price) in raw {
            let u = &users[user];
            debug_assert_eq!(u.id, user, "user slice must be indexed by id");
            let price = price.min(u.cost_dist.upper());
            offers.push(Offer { user, price });
            recruit_probs.push(recruit_prob(u, price));
        }
        OfferBatch {
            offers,
            recruit_probs,
        }
    }

    /// Batch offering `p_γ` to every member of `subset`.
    pub fn for_gamma(users: &[UserProfile], subset: &SiteSubset, pricing: GammaPricing) -> Self {
        OfferBatch::new(
            users,
            subset
                .iter()
                .map(|i| (i, price_for_gamma(&users[i], pricing.gamma))),
        )
    }

    pub fn empty() -> Self {
        OfferBatch {
            offers: Vec::new(),
            recruit_probs: Vec::new(),
        }
    }

    pub fn offers(&self) -> &[Offer] {
        &self.offers
    }

    pub fn recruit_probs(&self) -> &[f64] {
        &self.recruit_probs
    }

    pub fn len(&self) -> usize {
        self.offers.len()
    }

    pub fn is_empty(&self) -> bool {
        self.offers.is_empty()
    }

    /// Sum of all offered prices, accepted or not.
    pub fn face_value(&self) -> f64 {
        self.offers.iter().map(|o| o.price).sum()
    }

    /// The offered users as a subset.
    pub fn subset(&self) -> SiteSubset {
        self.offers.iter().map(|o| o.user).collect()
    }

    /// Accepted users and total payment for an outcome mask over offers.
    fn realize(&self, accepted_mask: u64) -> (SiteSubset, f64) {
        let mut set = SiteSubset::EMPTY;
        let mut paid = 0.0;
        for (k, o) in self.offers.iter().enumerate() {
            if accepted_mask >> k & 1 == 1 {
                set = set.with(o.user);
                paid += o.price;
            }
        }
        (set, paid)
    }
}

fn exact_expectation<V: ValueFn>(
    value_fn: &V,
    batch: &OfferBatch,
    pay: bool,
) -> Result<f64, ModelError> {
    let k = batch.len();
    if k > ENUMERATION_GUARD {
        return Err(ModelError::EnumerationGuard {
            n: k,
            guard: ENUMERATION_GUARD,
        });
    }
    let mut total = 0.0;
    for mask in 0u64..(1u64 << k) {
        let mut prob = 1.0;
        for (j, &g) in batch.recruit_probs.iter().enumerate() {
            prob *= if mask >> j & 1 == 1 { g } else { 1.0 - g };
        }
        if prob == 0.0 {
            continue;
        }
        let (set, paid) = batch.realize(mask);
        let u = value_fn.value(&set) - if pay { paid } else { 0.0 };
        total += prob * u;
    }
    Ok(total)
}

/// Exact expected utility: `Σ_y Pr(y)·[v(A_y) − Σ_{i∈A_y} p_i]` over all
/// `2^|batch|` outcome vectors. Guarded at 20 offers.
pub fn exact_eu<V: ValueFn>(value_fn: &V, batch: &OfferBatch) -> Result<f64, ModelError> {
    exact_expectation(value_fn, batch, true)
}

/// Exact expected value: as [`exact_eu`] with the payment term dropped.
pub fn exact_ev<V: ValueFn>(value_fn: &V, batch: &OfferBatch) -> Result<f64, ModelError> {
    exact_expectation(value_fn, batch, false)
}

fn mc_expectation<V: ValueFn>(
    value_fn: &V,
    batch: &OfferBatch,
    iterations: u64,
    pay: bool,
    mut uniform: impl FnMut(u64, usize) -> f64,
) -> f64 {
    assert!(iterations >= 1);
    let mut total = 0.0;
    for t in 0..iterations {
        // one uniform per offer, fixed offer order
        let mut mask = 0u64;
        for (j, &g) in batch.recruit_probs.iter().enumerate() {
            if uniform(t, batch.offers[j].user) < g {
                mask |= 1 << j;
            }
        }
        let (set, paid) = batch.realize(mask);
        total += value_fn.value(&set) - if pay { paid } else { 0.0 };
    }
    total / iterations as f64
}

/// Monte-Carlo expected utility: average of `u(A_y)` over sampled
/// outcome vectors. Unbiased for [`exact_eu`]; deterministic given the
/// RNG state.
pub fn mc_eu<V: ValueFn, R: Rng + ?Sized>(
    value_fn: &V,
    batch: &OfferBatch,
    iterations: u64,
    rng: &mut R,
) -> f64 {
    mc_expectation(value_fn, batch, iterations, true, |_, _| rng.gen::<f64>())
}

/// Monte-Carlo expected value (payment term dropped).
pub fn mc_ev<V: ValueFn, R: Rng + ?Sized>(
    value_fn: &V,
    batch: &OfferBatch,
    iterations: u64,
    rng: &mut R,
) -> f64 {
    mc_expectation(value_fn, batch, iterations, false, |_, _| rng.gen::<f64>())
}

/// Exact/MC switch used inside mechanism search loops.
///
/// Exact enumeration up to `exact_cap` offers, keyed-uniform MC above.
/// The MC coins are a pure function of (noise_seed, iteration, user), so
/// every oracle sharing a seed sees the same coin for the same user in
/// the same iteration — common random numbers across subsets and γ.
#[derive(Debug, Clone, Copy)]
pub struct EuEstimator {
    pub exact_cap: usize,
    pub mc_iterations: u64,
    pub noise_seed: u64,
}

impl EuEstimator {
    pub fn new(exact_cap: usize, mc_iterations: u64, noise_seed: u64) -> Self {
        assert!(exact_cap <= ENUMERATION_GUARD);
        assert!(mc_iterations >= 1);
        EuEstimator {
            exact_cap,
            mc_iterations,
            noise_seed,
        }
    }

    /// Default caps: exact when |A| ≤ 12, 50-iteration MC elsewhere.
    pub fn with_seed(noise_seed: u64) -> Self {
        EuEstimator::new(12, 50, noise_seed)
    }

    /// Same estimator drawing from a different coin table.
    pub fn reseeded(&self, noise_seed: u64) -> Self {
        EuEstimator { noise_seed, ..*self }
    }

    pub fn eu<V: ValueFn>(&self, value_fn: &V, batch: &OfferBatch) -> f64 {
        if batch.len() <= self.exact_cap {
            exact_eu(value_fn, batch).expect("within enumeration guard")
        } else {
            let seed = self.noise_seed;
            mc_expectation(value_fn, batch, self.mc_iterations, true, |t, user| {
                unit_uniform(seed, t, user as u64)
            })
        }
    }

    pub fn ev<V: ValueFn>(&self, value_fn: &V, batch: &OfferBatch) -> f64 {
        if batch.len() <= self.exact_cap {
            exact_ev(value_fn, batch).expect("within enumeration guard")
        } else {
            let seed = self.noise_seed;
            mc_expectation(value_fn, batch, self.mc_iterations, false, |t, user| {
                unit_uniform(seed, t, user as u64)
            })
        }
    }
}

/// The nonnegative shifted-EU oracle `A ↦ ÊU_γ(A) + p₀`, with
/// `p₀ = Σ_{i∈S} γ_i·p_γ({i})` (the maximum expected price).
///
/// For nonnegative `v`, `EU_γ(A) ≥ −Σ_{i∈A} γ_i p_i ≥ −p₀`, so the
/// exact shifted value is nonnegative for every A. Conditional marginal
/// valuations on non-monotone geometries and MC noise can dip below
/// zero; the USM guarantee absorbs the latter as oracle noise.
///
/// Returns the oracle and p₀.
pub fn shifted_eu<'a, V: ValueFn>(
    value_fn: &'a V,
    users: &'a [UserProfile],
    pricing: GammaPricing,
    estimator: EuEstimator,
) -> (SetFunctionOracle<'a>, f64) {
    let p0: f64 = users
        .iter()
        .map(|u| {
            let p = price_for_gamma(u, pricing.gamma);
            recruit_prob(u, p) * p
        })
        .sum();
    let oracle = SetFunctionOracle::new(users.len(), move |a: &SiteSubset| {
        let batch = OfferBatch::for_gamma(users, a, pricing);
        estimator.eu(value_fn, &batch) + p0
    });
    (oracle, p0)
}

/// Best-case shifted utility `u′_γ(A) = v(A) − p_γ(A) + p_γ(S)` — the
/// baseline oracle that assumes every offer is accepted.
pub fn best_case_utility<'a, V: ValueFn>(
    value_fn: &'a V,
    users: &'a [UserProfile],
    pricing: GammaPricing,
) -> (SetFunctionOracle<'a>, f64) {
    let shift: f64 = users
        .iter()
        .map(|u| price_for_gamma(u, pricing.gamma))
        .sum();
    let oracle = SetFunctionOracle::new(users.len(), move |a: &SiteSubset| {
        let batch = OfferBatch::for_gamma(users, a, pricing);
        value_fn.value(a) - batch.face_value() + shift
    });
    (oracle, shift)
}

/// Expected marginal utility of batch `B` against an already-recruited
/// set: `E[v(B_y | recruited) − p(B_y)]`.
pub fn conditional_marginal_eu<V: ValueFn>(
    value_fn: &V,
    batch: &OfferBatch,
    recruited: &SiteSubset,
    estimator: EuEstimator,
) -> f64 {
    assert!(
        batch.subset().mask() & recruited.mask() == 0,
        "batch must be disjoint from the recruited set"
    );
    let cond = ConditionalValue::new(value_fn, *recruited);
    estimator.eu(&cond, batch)
}

/// Maximizes the single-offer gain `(marginal_v − p)·F(p)` over the cost
/// support; returns the best price and its gain. ρ scales the resulting
/// EU uniformly and is deliberately excluded.
///
/// Coarse 256-point grid then golden-section refinement on the
/// bracketing interval — robust to the multimodality a truncated-normal
/// F can induce.
pub fn best_single_price(marginal_v: f64, dist: &CostDistribution) -> (f64, f64) {
    assert!(marginal_v.is_finite());
    let lo = dist.lower;
    let hi = dist.upper();
    let g = |p: f64| (marginal_v - p) * dist.cdf(p);

    const GRID: usize = 256;
    let step = (hi - lo) / GRID as f64;
    let mut best_k = 0;
    let mut best_g = f64::NEG_INFINITY;
    for k in 0..=GRID {
        let gv = g(lo + step * k as f64);
        if gv > best_g {
            best_g = gv;
            best_k = k;
        }
    }
    let mut a = lo + step * best_k.saturating_sub(1) as f64;
    let mut b = (lo + step * (best_k + 1) as f64).min(hi);

    // golden-section to 1e-9 on the bracketing interval
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = b - inv_phi * (b - a);
    let mut d = a + inv_phi * (b - a);
    let mut gc = g(c);
    let mut gd = g(d);
    while b - a > 1e-9 {
        if gc > gd {
            b = d;
            d = c;
            gd = gc;
            c = b - inv_phi * (b - a);
            gc = g(c);
        } else {
            a = c;
            c = d;
            gc = gd;
            d = a + inv_phi * (b - a);
            gd = g(d);
        }
    }
    let p = 0.5 * (a + b);
    let gp = g(p);
    if gp >= best_g {
        (p, gp)
    } else {
        (lo + step * best_k as f64, best_g)
    }
}
