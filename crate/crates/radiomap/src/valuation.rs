//! Monetary valuation of user subsets: `v(A) = κ·ln(1 + MI(A) + α|A|)`.

use std::cell::RefCell;
use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::field::{SiteField, SiteSubset};

/// Parameters of the log-MI valuation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ValuationParams {
    /// Currency per log-unit of information, κ > 0.
    pub kappa: f64,
    /// Per-user monotonicity margin, α ≥ 0 (nats per user).
    #[serde(default)]
    pub alpha: f64,
}

impl ValuationParams {
    pub fn new(kappa: f64, alpha: f64) -> Self {
        assert!(kappa > 0.0, "kappa must be positive");
        assert!(alpha >= 0.0, "alpha must be nonnegative");
        ValuationParams { kappa, alpha }
    }
}

/// A set-valued monetary valuation over subsets of the user ground set.
pub trait ValueFn {
    fn ground_size(&self) -> usize;

    fn value(&self, a: &SiteSubset) -> f64;

    /// `v(i|A) = v(A ∪ {i}) − v(A)`.
    fn marginal(&self, i: usize, a: &SiteSubset) -> f64 {
        self.value(&a.with(i)) - self.value(a)
    }
}

impl<V: ValueFn + ?Sized> ValueFn for &V {
    fn ground_size(&self) -> usize {
        (**self).ground_size()
    }
    fn value(&self, a: &SiteSubset) -> f64 {
        (**self).value(a)
    }
}

/// GP-backed valuation over a [`SiteField`].
pub struct GpValuation<'a> {
    field: &'a SiteField,
    params: ValuationParams,
}

impl<'a> GpValuation<'a> {
    pub fn new(field: &'a SiteField, params: ValuationParams) -> Self {
        GpValuation { field, params }
    }
}

impl ValueFn for GpValuation<'_> {
    fn ground_size(&self) -> usize {
        self.field.n_users()
    }

    fn value(&self, a: &SiteSubset) -> f64 {
        if a.is_empty() {
            return 0.0;
        }
        let mi = self
            .field
            .mutual_information(a)
            .expect("valuation over a well-formed field");
        self.params.kappa * (1.0 + mi + self.params.alpha * a.len() as f64).ln()
    }
}

/// Fixed-table valuation (used to inject the worked-example values).
pub struct TableValuation {
    n: usize,
    table: HashMap<u64, f64>,
}

impl TableValuation {
    /// `entries` maps subset bitmasks to values; `v(∅)` is always 0.
    pub fn new(n: usize, entries: impl IntoIterator<Item = (u64, f64)>) -> Self {
        let mut table: HashMap<u64, f64> = entries.into_iter().collect();
        table.insert(0, 0.0);
        TableValuation { n, table }
    }
}

impl ValueFn for TableValuation {
    fn ground_size(&self) -> usize {
        self.n
    }

    fn value(&self, a: &SiteSubset) -> f64 {
        *self
            .table
            .get(&a.mask())
            .unwrap_or_else(|| panic!("no table entry for subset {:#b}", a.mask()))
    }
}

/// Constant valuation: `v(A) = v0` for `A ≠ ∅`, `v(∅) = 0`.
///
/// The tutorial's shadowing-free model; deliberately not submodular
/// beyond normalization, so it is excluded from the submodularity suites.
pub struct ConstantValuation {
    pub n: usize,
    pub v0: f64,
}

impl ValueFn for ConstantValuation {
    fn ground_size(&self) -> usize {
        self.n
    }

    fn value(&self, a: &SiteSubset) -> f64 {
        if a.is_empty() {
            0.0
        } else {
            self.v0
        }
    }
}

/// Memoizing wrapper; subsets are keyed by bitmask.
///
/// Mechanism search loops re-evaluate the same subsets heavily (USM
/// running sets, repeated MC outcome draws), so this is load-bearing for
/// the desk-scale runtime budgets.
pub struct CachedValue<V> {
    inner: V,
    cache: RefCell<HashMap<u64, f64>>,
}

impl<V: ValueFn> CachedValue<V> {
    pub fn new(inner: V) -> Self {
        CachedValue {
            inner,
            cache: RefCell::new(HashMap::new()),
        }
    }
}

impl<V: ValueFn> ValueFn for CachedValue<V> {
    fn ground_size(&self) -> usize {
        self.inner.ground_size()
    }

    fn value(&self, a: &SiteSubset) -> f64 {
        if let Some(&v) = self.cache.borrow().get(&a.mask()) {
            return v;
        }
        let v = self.inner.value(a);
        self.cache.borrow_mut().insert(a.mask(), v);
        v
    }
}

/// Restriction of a valuation to marginals against a recruited set:
/// `f(A) = v(A ∪ R) − v(R)`.
pub struct ConditionalValue<V> {
    inner: V,
    recruited: SiteSubset,
}

impl<V: ValueFn> ConditionalValue<V> {
    pub fn new(inner: V, recruited: SiteSubset) -> Self {
        ConditionalValue { inner, recruited }
    }
}

impl<V: ValueFn> ValueFn for ConditionalValue<V> {
    fn ground_size(&self) -> usize {
        self.inner.ground_size()
    }

    fn value(&self, a: &SiteSubset) -> f64 {
        debug_assert!(
            a.mask() & self.recruited.mask() == 0,
            "argument must be disjoint from the recruited set"
        );
        self.inner.value(&a.union(&self.recruited)) - self.inner.value(&self.recruited)
    }
}
