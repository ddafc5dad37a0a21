//! Experiment worlds and paired mechanism comparisons.
//!
//! Randomness discipline: world generation, cost realizations, and
//! mechanism-internal MC each use an independent named substream of the
//! master seed, so e.g. changing MC iterations never changes the world.

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::cost::{CostDistribution, CostKind};
use crate::eu::{OfferBatch, UserProfile};
use crate::field::SiteField;
use crate::geo::{KernelSpec, Location};
use crate::mechanisms::{
    multi_batch_offering, run_single_batch, sequential_offering, vm_multi_batch, MechanismConfig,
    MechanismTranscript, OracleKind, Outcome, OutcomeSource,
};
use crate::rng::{derive_seed, substream};
use crate::valuation::{CachedValue, GpValuation, ValuationParams, ValueFn};
use crate::ModelError;

/// One experiment world: square area, mesh grid, users, model parameters.
#[derive(Debug, Clone)]
pub struct Scenario {
    /// Square side, km.
    pub area_km: f64,
    pub grid_resolution_km: f64,
    pub users: Vec<UserProfile>,
    pub kernel: KernelSpec,
    pub valuation: ValuationParams,
    pub seed: u64,
}

impl Scenario {
    pub fn field(&self) -> Result<SiteField, ModelError> {
        let sites = self
            .users
            .iter()
            .map(|u| (u.location, u.noise_variance))
            .collect();
        build_grid_field(
            sites,
            self.area_km,
            self.grid_resolution_km,
            self.kernel,
        )
    }
}

/// Mesh grid over a square area: side/resolution cells per axis,
/// half-resolution inset from the corner.
pub fn area_grid(area_km: f64, resolution_km: f64) -> Vec<Location> {
    assert!(area_km > 0.0 && resolution_km > 0.0);
    let per_side = (area_km / resolution_km).floor() as usize;
    let inset = resolution_km / 2.0;
    let mut grid = Vec::with_capacity(per_side * per_side);
    for i in 0..per_side {
        for j in 0..per_side {
            grid.push(Location::new(
                inset + resolution_km * j as f64,
                inset + resolution_km * i as f64,
            ));
        }
    }
    grid
}

pub fn build_grid_field(
    user_sites: Vec<(Location, f64)>,
    area_km: f64,
    resolution_km: f64,
    kernel: KernelSpec,
) -> Result<SiteField, ModelError> {
    crate::field::build_covariance(user_sites, area_grid(area_km, resolution_km), kernel)
}

/// Conditional-on-count homogeneous Poisson topology: n i.i.d. uniform
/// points in the square. With `min_distance_km`, each point is redrawn
/// until it clears every earlier point (post-hoc thinning).
pub fn poisson_topology(
    area_km: f64,
    n_users: usize,
    seed: u64,
    min_distance_km: Option<f64>,
) -> Vec<Location> {
    assert!(n_users >= 1);
    let mut rng = substream(seed, "world", 0);
    let mut points: Vec<Location> = Vec::with_capacity(n_users);
    for _ in 0..n_users {
        let mut attempts = 0;
        loop {
            let p = Location::new(rng.gen::<f64>() * area_km, rng.gen::<f64>() * area_km);
            let ok = match min_distance_km {
                None => true,
                Some(d) => points.iter().all(|q| q.distance(&p) >= d),
            };
            attempts += 1;
            // a crowded area may not admit the separation; keep the draw
            if ok || attempts > 1000 {
                points.push(p);
                break;
            }
        }
    }
    points
}

/// Draws per-user model parameters: c̲ ~ U[0.1, 0.2], σ²_ε ~ U[0.5, 1].
pub fn generate_users(
    locations: &[Location],
    cost_kind: CostKind,
    delta_c: f64,
    rho: f64,
    seed: u64,
) -> Vec<UserProfile> {
    assert!(delta_c > 0.0);
    let mut rng = substream(seed, "users", 0);
    locations
        .iter()
        .enumerate()
        .map(|(i, loc)| {
            let lower = 0.1 + 0.1 * rng.gen::<f64>();
            let noise = 0.5 + 0.5 * rng.gen::<f64>();
            UserProfile::new(
                i,
                *loc,
                noise,
                CostDistribution::new(cost_kind, lower, delta_c),
                rho,
            )
        })
        .collect()
}

/// One iteration's environment: a realized cost and one expiry coin per
/// user, shared by every mechanism in the comparison.
#[derive(Debug, Clone)]
pub struct CostRealization {
    pub costs: Vec<f64>,
    pub expiry_coins: Vec<f64>,
}

pub fn draw_realization(users: &[UserProfile], seed: u64, iteration: u64) -> CostRealization {
    let mut rng = substream(seed, "costs", iteration);
    // fixed draw order: one cost then one coin per user
    let mut costs = Vec::with_capacity(users.len());
    let mut coins = Vec::with_capacity(users.len());
    for u in users {
        costs.push(u.cost_dist.sample(&mut rng));
        coins.push(rng.gen::<f64>());
    }
    CostRealization {
        costs,
        expiry_coins: coins,
    }
}

/// Responds to a batch from a fixed realization: the offer expires iff
/// the user's coin ≥ ρ, otherwise it is accepted iff realized cost ≤
/// price. Threshold semantics make acceptance monotone in price, which
/// paired replay requires.
pub fn simulate_outcomes(
    users: &[UserProfile],
    realization: &CostRealization,
    batch: &OfferBatch,
) -> Result<Vec<Outcome>, ModelError> {
    batch
        .offers()
        .iter()
        .map(|o| {
            if o.user >= users.len() {
                return Err(ModelError::UnknownUser(o.user));
            }
            Ok(if realization.expiry_coins[o.user] >= users[o.user].rho {
                Outcome::Expired
            } else if realization.costs[o.user] <= o.price {
                Outcome::Accepted
            } else {
                Outcome::Rejected
            })
        })
        .collect()
}

/// [`OutcomeSource`] over one shared realization.
pub struct RealizationSource<'a> {
    pub users: &'a [UserProfile],
    pub realization: &'a CostRealization,
}

impl OutcomeSource for RealizationSource<'_> {
    fn respond(&mut self, batch: &OfferBatch) -> Vec<Outcome> {
        simulate_outcomes(self.users, self.realization, batch)
            .expect("mechanisms offer only known users")
    }
}

/// The comparable mechanisms.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum MechanismKind {
    Sequential,
    SingleBatchEu,
    SingleBatchU,
    MultiBatchEu,
    MultiBatchU,
    VmMultiBatchV,
    VmMultiBatchEv,
}

impl MechanismKind {
    pub fn label(&self) -> &'static str {
        match self {
            MechanismKind::Sequential => "SE",
            MechanismKind::SingleBatchEu => "SB-EU",
            MechanismKind::SingleBatchU => "SB-u",
            MechanismKind::MultiBatchEu => "MB-EU",
            MechanismKind::MultiBatchU => "MB-u",
            MechanismKind::VmMultiBatchV => "VM-GS-v",
            MechanismKind::VmMultiBatchEv => "VM-GS-EV",
        }
    }

    pub fn all() -> &'static [MechanismKind] {
        &[
            MechanismKind::Sequential,
            MechanismKind::SingleBatchEu,
            MechanismKind::SingleBatchU,
            MechanismKind::MultiBatchEu,
            MechanismKind::MultiBatchU,
        ]
    }

    fn oracle_kind(&self) -> OracleKind {
        match self {
            MechanismKind::SingleBatchU | MechanismKind::MultiBatchU | MechanismKind::VmMultiBatchV => {
                OracleKind::BestCaseU
            }
            _ => OracleKind::McEu,
        }
    }

    pub fn run<V: ValueFn>(
        &self,
        users: &[UserProfile],
        value_fn: &V,
        config: &MechanismConfig,
        source: &mut dyn OutcomeSource,
    ) -> MechanismTranscript {
        let config = config.clone().with_oracle(self.oracle_kind());
        match self {
            MechanismKind::Sequential => sequential_offering(users, value_fn, &config, source),
            MechanismKind::SingleBatchEu | MechanismKind::SingleBatchU => {
                run_single_batch(users, value_fn, &config, source)
            }
            MechanismKind::MultiBatchEu | MechanismKind::MultiBatchU => {
                multi_batch_offering(users, value_fn, &config, source)
            }
            MechanismKind::VmMultiBatchV | MechanismKind::VmMultiBatchEv => {
                vm_multi_batch(users, value_fn, &config, source)
            }
        }
    }
}

/// One mechanism's result for one iteration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonRow {
    pub iteration: u64,
    pub mechanism: MechanismKind,
    pub utility: f64,
    pub value: f64,
    pub payment: f64,
    pub batches: usize,
    pub offers: usize,
    pub gamma_star: Option<f64>,
    pub wall_ms: f64,
}

/// Per-mechanism mean and standard error over iterations.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MechanismSummary {
    pub mechanism: MechanismKind,
    pub iterations: u64,
    pub mean_utility: f64,
    pub stderr_utility: f64,
    pub mean_value: f64,
    pub mean_payment: f64,
    pub mean_batches: f64,
    pub mean_offers: f64,
}

/// Paired comparison: per iteration one realization is drawn and
/// replayed identically to every mechanism. Iterations run in parallel;
/// rows are ordered by (iteration, mechanism position).
pub fn run_comparison(
    scenario: &Scenario,
    mechanisms: &[MechanismKind],
    base_config: &MechanismConfig,
    iterations: u64,
) -> Result<Vec<ComparisonRow>, ModelError> {
    assert!(iterations >= 1);
    let field = scenario.field()?;
    let rows: Vec<Vec<ComparisonRow>> = (0..iterations)
        .into_par_iter()
        .map(|it| {
            let realization = draw_realization(&scenario.users, scenario.seed, it);
            let mut config = base_config.clone();
            config.seed = derive_seed(scenario.seed, "mc", it);
            mechanisms
                .iter()
                .map(|kind| {
                    // per-(iteration, mechanism) value cache
                    let v = CachedValue::new(GpValuation::new(&field, scenario.valuation));
                    let mut source = RealizationSource {
                        users: &scenario.users,
                        realization: &realization,
                    };
                    let started = std::time::Instant::now();
                    let t = kind.run(&scenario.users, &v, &config, &mut source);
                    ComparisonRow {
                        iteration: it,
                        mechanism: *kind,
                        utility: t.achieved_utility,
                        value: t.achieved_value,
                        payment: t.total_payment,
                        batches: t.batch_count(),
                        offers: t.offer_count(),
                        gamma_star: t.gamma_star,
                        wall_ms: started.elapsed().as_secs_f64() * 1e3,
                    }
                })
                .collect()
        })
        .collect();
    Ok(rows.into_iter().flatten().collect())
}

pub fn summarize(rows: &[ComparisonRow]) -> Vec<MechanismSummary> {
    let mut kinds: Vec<MechanismKind> = Vec::new();
    for r in rows {
        if !kinds.contains(&r.mechanism) {
            kinds.push(r.mechanism);
        }
    }
    kinds
        .into_iter()
        .map(|kind| {
            let us: Vec<f64> = rows
                .iter()
                .filter(|r| r.mechanism == kind)
                .map(|r| r.utility)
                .collect();
            let n = us.len() as f64;
            let mean = us.iter().sum::<f64>() / n;
            let var = us.iter().map(|u| (u - mean).powi(2)).sum::<f64>() / n;
            let pick = |f: fn(&ComparisonRow) -> f64| {
                rows.iter()
                    .filter(|r| r.mechanism == kind)
                    .map(f)
                    .sum::<f64>()
                    / n
            };
            MechanismSummary {
                mechanism: kind,
                iterations: us.len() as u64,
                mean_utility: mean,
                stderr_utility: (var / n).sqrt(),
                mean_value: pick(|r| r.value),
                mean_payment: pick(|r| r.payment),
                mean_batches: pick(|r| r.batches as f64),
                mean_offers: pick(|r| r.offers as f64),
            }
        })
        .collect()
}
