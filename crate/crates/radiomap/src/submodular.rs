//! Generic set-function maximizers: deterministic double-greedy USM,
//! budgeted greedy knapsack, and brute-force oracles.

use std::cell::Cell;

use rand::Rng;

use crate::field::SiteSubset;
use crate::ModelError;

/// Enumeration guard for the brute-force oracles.
pub const ENUMERATION_GUARD: usize = 20;

/// A counted set-function oracle over ground set `{0..n}`.
pub struct SetFunctionOracle<'a> {
    n: usize,
    eval: Box<dyn Fn(&SiteSubset) -> f64 + 'a>,
    queries: Cell<u64>,
}

impl<'a> SetFunctionOracle<'a> {
    pub fn new(n: usize, eval: impl Fn(&SiteSubset) -> f64 + 'a) -> Self {
        SetFunctionOracle {
            n,
            eval: Box::new(eval),
            queries: Cell::new(0),
        }
    }

    pub fn ground_size(&self) -> usize {
        self.n
    }

    pub fn eval(&self, a: &SiteSubset) -> f64 {
        self.queries.set(self.queries.get() + 1);
        (self.eval)(a)
    }

    /// Number of evaluations so far.
    pub fn queries(&self) -> u64 {
        self.queries.get()
    }

    pub fn reset_queries(&self) {
        self.queries.set(0);
    }
}

/// Deterministic double-greedy for unconstrained submodular maximization.
///
/// Single pass in ascending index order; element `i` is kept iff the
/// forward gain `f(A ∪ {i}) − f(A)` is at least the backward gain
/// `f(B ∖ {i}) − f(B)`. Running values are memoized, so the pass costs
/// `2n + 2` oracle queries. For nonnegative submodular `f` the returned
/// set achieves at least ⅓ of the optimum.
pub fn usm_double_greedy(oracle: &SetFunctionOracle) -> SiteSubset {
    let n = oracle.ground_size();
    let mut lower = SiteSubset::EMPTY;
    let mut upper = SiteSubset::full(n);
    let mut f_lower = oracle.eval(&lower);
    let mut f_upper = oracle.eval(&upper);
    for i in 0..n {
        let with_i = lower.with(i);
        let without_i = upper.without(i);
        let f_with = oracle.eval(&with_i);
        let f_without = oracle.eval(&without_i);
        let a_gain = f_with - f_lower;
        let b_gain = f_without - f_upper;
        if a_gain >= b_gain {
            lower = with_i;
            f_lower = f_with;
        } else {
            upper = without_i;
            f_upper = f_without;
        }
    }
    debug_assert_eq!(lower, upper);
    lower
}

/// Exhaustive maximum over all `2^n` subsets.
///
/// Ties break toward smaller cardinality, then lexicographically on the
/// sorted member list.
pub fn brute_force_max(
    oracle: &SetFunctionOracle,
    n: usize,
) -> Result<(SiteSubset, f64), ModelError> {
    if n > ENUMERATION_GUARD {
        return Err(ModelError::EnumerationGuard {
            n,
            guard: ENUMERATION_GUARD,
        });
    }
    let mut best = (SiteSubset::EMPTY, oracle.eval(&SiteSubset::EMPTY));
    for mask in 1u64..(1u64 << n) {
        let a = SiteSubset::from_mask(mask);
        let v = oracle.eval(&a);
        if v > best.1 || (v == best.1 && better_tie(&a, &best.0)) {
            best = (a, v);
        }
    }
    Ok(best)
}

fn better_tie(a: &SiteSubset, b: &SiteSubset) -> bool {
    a.len() < b.len() || (a.len() == b.len() && a.mask() < b.mask())
}

/// A budgeted maximization instance: oracle, per-element prices, budget.
pub struct BudgetedInstance<'a> {
    pub oracle: SetFunctionOracle<'a>,
    pub prices: Vec<f64>,
    pub budget: f64,
    /// Compare the greedy set against the best affordable singleton
    /// (needed for the approximation guarantee; can be disabled).
    pub singleton_fallback: bool,
}

impl<'a> BudgetedInstance<'a> {
    pub fn new(oracle: SetFunctionOracle<'a>, prices: Vec<f64>, budget: f64) -> Self {
        assert_eq!(prices.len(), oracle.ground_size());
        assert!(prices.iter().all(|p| p.is_finite() && *p >= 0.0));
        assert!(budget >= 0.0);
        BudgetedInstance {
            oracle,
            prices,
            budget,
            singleton_fallback: true,
        }
    }
}

/// Greedy knapsack selection by normalized marginal value.
///
/// Repeatedly adds the element with the best marginal-value-per-price
/// ratio among those still affordable. An element that wins the ratio
/// argmax but does not fit the remaining budget is dropped from
/// consideration (the selection loop would not terminate otherwise).
/// Finally the greedy set is compared against the best affordable
/// singleton. Guarantees `(1 − 1/√e)` of the budgeted optimum for
/// monotone submodular `f`.
pub fn greedy_knapsack(instance: &BudgetedInstance) -> SiteSubset {
    let n = instance.oracle.ground_size();
    let mut selected = SiteSubset::EMPTY;
    let mut f_selected = instance.oracle.eval(&selected);
    let mut spent = 0.0;
    let mut candidates: Vec<usize> = (0..n).collect();

    while !candidates.is_empty() {
        let mut best: Option<(usize, usize, f64)> = None; // (pos, idx, ratio)
        for (pos, &j) in candidates.iter().enumerate() {
            let gain = instance.oracle.eval(&selected.with(j)) - f_selected;
            let p = instance.prices[j];
            let ratio = if p > 0.0 {
                gain / p
            } else if gain > 0.0 {
                f64::INFINITY
            } else {
                0.0
            };
            // ties break toward lower index, i.e. strict improvement only
            if best.map_or(true, |(_, _, r)| ratio > r) {
                best = Some((pos, j, ratio));
            }
        }
        let (pos, j, _) = best.unwrap();
        candidates.swap_remove(pos);
        if spent + instance.prices[j] <= instance.budget {
            spent += instance.prices[j];
            selected = selected.with(j);
            f_selected = instance.oracle.eval(&selected);
        }
        // else: drop j and keep scanning the rest
    }

    if instance.singleton_fallback {
        let mut best_single: Option<(usize, f64)> = None;
        for i in 0..n {
            if instance.prices[i] > instance.budget {
                continue;
            }
            let v = instance.oracle.eval(&SiteSubset::singleton(i));
            if best_single.map_or(true, |(_, bv)| v > bv) {
                best_single = Some((i, v));
            }
        }
        if let Some((i, v)) = best_single {
            if v > f_selected {
                return SiteSubset::singleton(i);
            }
        }
    }
    selected
}

/// Exhaustive budgeted maximum (test oracle for the greedy bound).
pub fn brute_force_budgeted_max(
    oracle: &SetFunctionOracle,
    prices: &[f64],
    budget: f64,
) -> Result<(SiteSubset, f64), ModelError> {
    let n = oracle.ground_size();
    if n > ENUMERATION_GUARD {
        return Err(ModelError::EnumerationGuard {
            n,
            guard: ENUMERATION_GUARD,
        });
    }
    let mut best = (SiteSubset::EMPTY, oracle.eval(&SiteSubset::EMPTY));
    for mask in 1u64..(1u64 << n) {
        let a = SiteSubset::from_mask(mask);
        let cost: f64 = a.iter().map(|i| prices[i]).sum();
        if cost > budget {
            continue;
        }
        let v = oracle.eval(&a);
        if v > best.1 || (v == best.1 && better_tie(&a, &best.0)) {
            best = (a, v);
        }
    }
    Ok(best)
}

/// A weighted-coverage function: `f(A) = Σ weights of universe elements
/// covered by the sets in A`. Monotone, submodular, nonnegative,
/// normalized.
#[derive(Debug, Clone)]
pub struct CoverageFunction {
    pub n: usize,
    /// Bitmask over the universe covered by each ground-set element.
    pub covers: Vec<u64>,
    pub weights: Vec<f64>,
}

impl CoverageFunction {
    pub fn eval(&self, a: &SiteSubset) -> f64 {
        let mut covered = 0u64;
        for i in a.iter() {
            covered |= self.covers[i];
        }
        self.weights
            .iter()
            .enumerate()
            .filter(|(e, _)| covered >> e & 1 == 1)
            .map(|(_, w)| w)
            .sum()
    }

    pub fn oracle(&self) -> SetFunctionOracle<'_> {
        SetFunctionOracle::new(self.n, move |a| self.eval(a))
    }
}

/// A weighted graph-cut function: `f(A) = Σ w_ij over edges with exactly
/// one endpoint in A`. Nonnegative submodular, generally non-monotone.
#[derive(Debug, Clone)]
pub struct CutFunction {
    pub n: usize,
    pub edges: Vec<(usize, usize, f64)>,
}

impl CutFunction {
    pub fn eval(&self, a: &SiteSubset) -> f64 {
        self.edges
            .iter()
            .filter(|(u, v, _)| a.contains(*u) != a.contains(*v))
            .map(|(_, _, w)| w)
            .sum()
    }

    pub fn oracle(&self) -> SetFunctionOracle<'_> {
        SetFunctionOracle::new(self.n, move |a| self.eval(a))
    }
}

/// Random weighted-coverage instance (monotone suites).
pub fn random_coverage_instance<R: Rng + ?Sized>(n: usize, rng: &mut R) -> CoverageFunction {
    assert!(n <= 14, "instance generator capped at n = 14");
    let universe = (2 * n).min(40);
    let covers = (0..n)
        .map(|_| {
            let mut m = 0u64;
            for e in 0..universe {
                if rng.gen::<f64>() < 0.35 {
                    m |= 1 << e;
                }
            }
            m
        })
        .collect();
    let weights = (0..universe).map(|_| rng.gen::<f64>() * 2.0).collect();
    CoverageFunction {
        n,
        covers,
        weights,
    }
}

/// Random weighted-cut instance (non-monotone suites).
pub fn random_cut_instance<R: Rng + ?Sized>(n: usize, rng: &mut R) -> CutFunction {
    assert!(n <= 14, "instance generator capped at n = 14");
    let mut edges = Vec::new();
    for u in 0..n {
        for v in 0..u {
            if rng.gen::<f64>() < 0.5 {
                edges.push((v, u, rng.gen::<f64>() * 2.0));
            }
        }
    }
    CutFunction { n, edges }
}
