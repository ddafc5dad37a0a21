//! The offering mechanisms: sequential, single-batch, multi-batch, and
//! the budget-constrained VM variants.
//!
//! Every mechanism interacts with one [`OutcomeSource`] and never offers
//! to the same user twice within a run.

use crate::eu::{
    best_case_utility, best_single_price, conditional_marginal_eu, price_for_gamma, shifted_eu,
    EuEstimator, GammaPricing, OfferBatch, UserProfile,
};
use crate::field::SiteSubset;
use crate::rng::derive_seed;
use crate::submodular::{greedy_knapsack, usm_double_greedy, BudgetedInstance, SetFunctionOracle};
use crate::valuation::{ConditionalValue, ValueFn};

/// Per-offer realized result.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Outcome {
    Expired,
    Rejected,
    Accepted,
}

/// Responder mapping a batch of offers to one outcome per offer.
pub trait OutcomeSource {
    fn respond(&mut self, batch: &OfferBatch) -> Vec<Outcome>;
}

/// Fixed-policy source for tests and degenerate runs.
pub struct ScriptedSource<F: FnMut(usize, f64) -> Outcome>(pub F);

impl<F: FnMut(usize, f64) -> Outcome> OutcomeSource for ScriptedSource<F> {
    fn respond(&mut self, batch: &OfferBatch) -> Vec<Outcome> {
        batch.offers().iter().map(|o| (self.0)(o.user, o.price)).collect()
    }
}

/// Source accepting every offer.
pub fn accept_all() -> impl OutcomeSource {
    ScriptedSource(|_, _| Outcome::Accepted)
}

/// Source rejecting every offer.
pub fn reject_all() -> impl OutcomeSource {
    ScriptedSource(|_, _| Outcome::Rejected)
}

/// Source on which every offer expires.
pub fn expire_all() -> impl OutcomeSource {
    ScriptedSource(|_, _| Outcome::Expired)
}

#[derive(Debug, Clone, PartialEq)]
pub struct Round {
    pub batch: OfferBatch,
    pub outcomes: Vec<Outcome>,
    /// The γ the batch was priced at (None for sequential rounds).
    pub gamma: Option<f64>,
}

/// Full record of one mechanism run.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct MechanismTranscript {
    pub rounds: Vec<Round>,
    pub recruited: SiteSubset,
    /// Paid only to accepted offers.
    pub total_payment: f64,
    pub achieved_value: f64,
    pub achieved_utility: f64,
    /// γ of the first sent batch, if any batch mechanism ran.
    pub gamma_star: Option<f64>,
}

impl MechanismTranscript {
    pub fn batch_count(&self) -> usize {
        self.rounds.len()
    }

    pub fn offer_count(&self) -> usize {
        self.rounds.iter().map(|r| r.batch.len()).sum()
    }

    fn record(&mut self, batch: OfferBatch, outcomes: Vec<Outcome>, gamma: Option<f64>) {
        for (o, outcome) in batch.offers().iter().zip(&outcomes) {
            if *outcome == Outcome::Accepted {
                self.recruited = self.recruited.with(o.user);
                self.total_payment += o.price;
            }
        }
        if self.gamma_star.is_none() {
            self.gamma_star = gamma;
        }
        self.rounds.push(Round {
            batch,
            outcomes,
            gamma,
        });
    }

    fn finish<V: ValueFn>(&mut self, value_fn: &V) {
        self.achieved_value = value_fn.value(&self.recruited);
        self.achieved_utility = self.achieved_value - self.total_payment;
    }
}

/// Which set-function oracle drives the batch selection.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OracleKind {
    /// Best-case shifted utility u′_γ (baseline; GS-v in the VM setting).
    BestCaseU,
    /// Estimated shifted EU′_γ (GS-EV in the VM setting).
    McEu,
}

#[derive(Debug, Clone)]
pub struct MechanismConfig {
    /// Candidate recruit probabilities, ascending in (0, 1].
    pub gamma_grid: Vec<f64>,
    /// Stop threshold τ > 0 on (marginal) EU; doubles as τ_ev for VM.
    pub tau: f64,
    pub oracle_kind: OracleKind,
    pub mc_iterations: u64,
    /// Exact EU enumeration up to this batch size, MC above.
    pub exact_cap: usize,
    /// Hard budget (VM mechanisms only).
    pub budget: f64,
    pub seed: u64,
    /// Sequential: recompute best prices after every round, not only
    /// after acceptances (sensitivity studies).
    pub always_recompute: bool,
}

impl MechanismConfig {
    pub fn new(seed: u64) -> Self {
        let gamma_grid = (1..=20).map(|k| k as f64 * 0.05).collect();
        MechanismConfig {
            gamma_grid,
            tau: 0.01,
            oracle_kind: OracleKind::McEu,
            mc_iterations: 50,
            exact_cap: 12,
            budget: f64::INFINITY,
            seed,
            always_recompute: false,
        }
    }

    pub fn with_gamma_grid(mut self, grid: Vec<f64>) -> Self {
        assert!(!grid.is_empty());
        assert!(grid.windows(2).all(|w| w[0] < w[1]), "grid must ascend");
        assert!(grid.iter().all(|g| *g > 0.0 && *g <= 1.0));
        self.gamma_grid = grid;
        self
    }

    pub fn with_oracle(mut self, kind: OracleKind) -> Self {
        self.oracle_kind = kind;
        self
    }

    pub fn with_budget(mut self, budget: f64) -> Self {
        assert!(budget >= 0.0);
        self.budget = budget;
        self
    }

    fn estimator(&self, name: &str, index: u64) -> EuEstimator {
        EuEstimator::new(
            self.exact_cap,
            self.mc_iterations,
            derive_seed(self.seed, name, index),
        )
    }
}

/// One best offer per round: offer the user maximizing `ρ_i·gain_i` at
/// the gain-maximizing price, recompute prices only after an acceptance,
/// stop when no remaining user clears τ.
pub fn sequential_offering<V: ValueFn>(
    users: &[UserProfile],
    value_fn: &V,
    config: &MechanismConfig,
    source: &mut dyn OutcomeSource,
) -> MechanismTranscript {
    assert!(!users.is_empty());
    let mut t = MechanismTranscript::default();
    let mut offered = SiteSubset::EMPTY;

    // (price, expected gain) per user against the current recruited set
    let compute = |recruited: &SiteSubset| -> Vec<(f64, f64)> {
        users
            .iter()
            .map(|u| {
                let marginal = value_fn.marginal(u.id, recruited);
                let (p, gain) = best_single_price(marginal, &u.cost_dist);
                (p, gain * u.rho)
            })
            .collect()
    };
    let mut quotes = compute(&t.recruited);

    loop {
        let best = users
            .iter()
            .filter(|u| !offered.contains(u.id))
            .map(|u| (u.id, quotes[u.id]))
            .max_by(|a, b| a.1 .1.total_cmp(&b.1 .1));
        let Some((i, (price, eu))) = best else { break };
        if eu <= config.tau {
            break;
        }
        offered = offered.with(i);
        let batch = OfferBatch::new(users, [(i, price)]);
        let outcomes = source.respond(&batch);
        debug_assert_eq!(outcomes.len(), 1);
        let accepted = outcomes[0] == Outcome::Accepted;
        t.record(batch, outcomes, None);
        if accepted || config.always_recompute {
            quotes = compute(&t.recruited);
        }
    }
    t.finish(value_fn);
    t
}

/// View of a valuation restricted to a compacted ground set.
struct Remapped<'a, V> {
    inner: &'a V,
    ids: &'a [usize],
}

// manual impls: Copy regardless of V (fields are shared references)
impl<V> Clone for Remapped<'_, V> {
    fn clone(&self) -> Self {
        *self
    }
}
impl<V> Copy for Remapped<'_, V> {}

impl<V: ValueFn> ValueFn for Remapped<'_, V> {
    fn ground_size(&self) -> usize {
        self.ids.len()
    }

    fn value(&self, a: &SiteSubset) -> f64 {
        let original: SiteSubset = a.iter().map(|i| self.ids[i]).collect();
        self.inner.value(&original)
    }
}

/// Result of one batch selection.
#[derive(Debug, Clone, PartialEq)]
pub struct BatchSelection {
    /// Offers in original user ids; empty when nothing clears selection.
    pub batch: OfferBatch,
    pub gamma_star: f64,
    /// Common-stream estimate of the batch's (conditional) EU or EV.
    pub estimate: f64,
}

fn compact<'a>(
    users: &'a [UserProfile],
    available: &SiteSubset,
) -> (Vec<UserProfile>, Vec<usize>) {
    let ids: Vec<usize> = available.iter().filter(|&i| i < users.len()).collect();
    let compacted = ids
        .iter()
        .enumerate()
        .map(|(k, &i)| UserProfile { id: k, ..users[i].clone() })
        .collect();
    (compacted, ids)
}

/// One γ-grid search: per γ, run USM on the shifted oracle, then score
/// every candidate set by estimated EU on a common stream and keep the
/// best (ties prefer larger γ). The search stops early once USM returns
/// the empty set.
///
/// `recruited` conditions the valuation (marginal values against an
/// already-recruited set); pass the empty set for a standalone batch.
pub fn single_batch_offering<V: ValueFn>(
    users: &[UserProfile],
    value_fn: &V,
    config: &MechanismConfig,
    available: &SiteSubset,
    recruited: &SiteSubset,
) -> BatchSelection {
    assert!(!config.gamma_grid.is_empty());
    let (c_users, ids) = compact(users, available);
    let first_gamma = config.gamma_grid[0];
    if c_users.is_empty() {
        return BatchSelection {
            batch: OfferBatch::empty(),
            gamma_star: first_gamma,
            estimate: 0.0,
        };
    }
    let cond = ConditionalValue::new(value_fn, *recruited);
    let remapped = Remapped {
        inner: &cond,
        ids: &ids,
    };

    let mut candidates: Vec<(f64, SiteSubset)> = Vec::new();
    for (gi, &gamma) in config.gamma_grid.iter().enumerate() {
        let pricing = GammaPricing::new(gamma);
        // fresh MC stream per γ so comparison noise is independent
        let est = config.estimator("batch-oracle", gi as u64);
        let (oracle, _) = match config.oracle_kind {
            OracleKind::McEu => shifted_eu(&remapped, &c_users, pricing, est),
            OracleKind::BestCaseU => best_case_utility(&remapped, &c_users, pricing),
        };
        let set = usm_double_greedy(&oracle);
        if set.is_empty() {
            break;
        }
        candidates.push((gamma, set));
    }

    // re-score every candidate on one common stream; ties → larger γ
    let score_est = config.estimator("batch-score", 0);
    let mut best: Option<(f64, SiteSubset, f64)> = None;
    for &(gamma, set) in &candidates {
        let batch = OfferBatch::for_gamma(&c_users, &set, GammaPricing::new(gamma));
        let score = score_est.eu(&remapped, &batch);
        if best.map_or(true, |(_, _, s)| score >= s) {
            best = Some((gamma, set, score));
        }
    }

    match best {
        Some((gamma, set, score)) => {
            let batch = OfferBatch::new(
                users,
                set.iter()
                    .map(|k| (ids[k], price_for_gamma(&users[ids[k]], gamma))),
            );
            BatchSelection {
                batch,
                gamma_star: gamma,
                estimate: score,
            }
        }
        None => BatchSelection {
            batch: OfferBatch::empty(),
            gamma_star: first_gamma,
            estimate: 0.0,
        },
    }
}

/// Standalone single-batch mechanism: select once, send once.
pub fn run_single_batch<V: ValueFn>(
    users: &[UserProfile],
    value_fn: &V,
    config: &MechanismConfig,
    source: &mut dyn OutcomeSource,
) -> MechanismTranscript {
    let mut t = MechanismTranscript::default();
    let all = SiteSubset::full(users.len());
    let sel = single_batch_offering(users, value_fn, config, &all, &SiteSubset::EMPTY);
    if !sel.batch.is_empty() {
        let outcomes = source.respond(&sel.batch);
        t.record(sel.batch, outcomes, Some(sel.gamma_star));
    }
    t.finish(value_fn);
    t
}

/// Repeated single-batch selection on the remaining users with the
/// conditional oracle; a batch is sent only while its estimated marginal
/// EU clears τ. Each user is offered at most once.
pub fn multi_batch_offering<V: ValueFn>(
    users: &[UserProfile],
    value_fn: &V,
    config: &MechanismConfig,
    source: &mut dyn OutcomeSource,
) -> MechanismTranscript {
    let mut t = MechanismTranscript::default();
    let mut remaining = SiteSubset::full(users.len());
    let mut round = 0u64;
    while !remaining.is_empty() {
        let mut cfg = config.clone();
        cfg.seed = derive_seed(config.seed, "mb-round", round);
        let sel = single_batch_offering(users, value_fn, &cfg, &remaining, &t.recruited);
        if sel.batch.is_empty() {
            break;
        }
        // gate on the common-stream marginal EU estimate
        let gate = config.estimator("mb-gate", round);
        let marginal = conditional_marginal_eu(value_fn, &sel.batch, &t.recruited, gate);
        if marginal <= config.tau {
            break;
        }
        for o in sel.batch.offers() {
            remaining = remaining.without(o.user);
        }
        let outcomes = source.respond(&sel.batch);
        t.record(sel.batch, outcomes, Some(sel.gamma_star));
        round += 1;
    }
    t.finish(value_fn);
    t
}

/// Budgeted batch selection: per γ, greedy knapsack under prices p_γ and
/// the hard budget, objective v (BestCaseU ⇒ GS-v) or estimated EV
/// (McEu ⇒ GS-EV); candidates are compared by estimated EV on a common
/// stream.
pub fn vm_single_batch<V: ValueFn>(
    users: &[UserProfile],
    value_fn: &V,
    config: &MechanismConfig,
    available: &SiteSubset,
    recruited: &SiteSubset,
) -> BatchSelection {
    assert!(config.budget >= 0.0);
    let (c_users, ids) = compact(users, available);
    let first_gamma = config.gamma_grid[0];
    if c_users.is_empty() {
        return BatchSelection {
            batch: OfferBatch::empty(),
            gamma_star: first_gamma,
            estimate: 0.0,
        };
    }
    let cond = ConditionalValue::new(value_fn, *recruited);
    let remapped = Remapped {
        inner: &cond,
        ids: &ids,
    };

    let score_est = config.estimator("vm-score", 0);
    let mut best: Option<(f64, SiteSubset, f64)> = None;
    for (gi, &gamma) in config.gamma_grid.iter().enumerate() {
        let pricing = GammaPricing::new(gamma);
        let prices: Vec<f64> = c_users
            .iter()
            .map(|u| price_for_gamma(u, gamma))
            .collect();
        let est = config.estimator("vm-oracle", gi as u64);
        let cu = &c_users;
        let oracle = match config.oracle_kind {
            OracleKind::BestCaseU => {
                SetFunctionOracle::new(cu.len(), move |a: &SiteSubset| remapped.value(a))
            }
            OracleKind::McEu => SetFunctionOracle::new(cu.len(), move |a: &SiteSubset| {
                let batch = OfferBatch::for_gamma(cu, a, pricing);
                est.ev(&remapped, &batch)
            }),
        };
        let instance = BudgetedInstance::new(oracle, prices, config.budget);
        let set = greedy_knapsack(&instance);
        let batch = OfferBatch::for_gamma(&c_users, &set, pricing);
        let score = score_est.ev(&remapped, &batch);
        if best.map_or(true, |(_, _, s)| score >= s) {
            best = Some((gamma, set, score));
        }
    }

    let (gamma, set, score) = best.unwrap();
    let batch = OfferBatch::new(
        users,
        set.iter()
            .map(|k| (ids[k], price_for_gamma(&users[ids[k]], gamma))),
    );
    BatchSelection {
        // empty selection carries no price information: report γ₁
        gamma_star: if set.is_empty() { first_gamma } else { gamma },
        batch,
        estimate: score,
    }
}

/// Budgeted multi-batch: repeat [`vm_single_batch`] on remaining users,
/// decrementing the budget by each sent batch's full face value; stop on
/// empty batch, estimate ≤ τ_ev, exhausted budget, or exhausted users.
pub fn vm_multi_batch<V: ValueFn>(
    users: &[UserProfile],
    value_fn: &V,
    config: &MechanismConfig,
    source: &mut dyn OutcomeSource,
) -> MechanismTranscript {
    let mut t = MechanismTranscript::default();
    let mut remaining = SiteSubset::full(users.len());
    let mut budget = config.budget;
    let mut round = 0u64;
    while !remaining.is_empty() && budget > 0.0 {
        let mut cfg = config.clone();
        cfg.seed = derive_seed(config.seed, "vm-round", round);
        cfg.budget = budget;
        let sel = vm_single_batch(users, value_fn, &cfg, &remaining, &t.recruited);
        if sel.batch.is_empty() || sel.estimate <= config.tau {
            break;
        }
        budget -= sel.batch.face_value();
        debug_assert!(budget >= -1e-9, "hard budget violated");
        for o in sel.batch.offers() {
            remaining = remaining.without(o.user);
        }
        let outcomes = source.respond(&sel.batch);
        t.record(sel.batch, outcomes, Some(sel.gamma_star));
        round += 1;
    }
    t.finish(value_fn);
    t
}
