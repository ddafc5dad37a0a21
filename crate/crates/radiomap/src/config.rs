//! Experiment configuration: the JSON schema consumed by the CLI.

use serde::{Deserialize, Serialize};

use crate::cost::CostKind;
use crate::geo::KernelSpec;
use crate::mechanisms::MechanismConfig;
use crate::scenario::{generate_users, poisson_topology, MechanismKind, Scenario};
use crate::valuation::ValuationParams;

fn default_area() -> f64 {
    6.0
}
fn default_resolution() -> f64 {
    0.45
}
fn default_kernel() -> KernelSpec {
    KernelSpec::new(15.5, 0.7)
}
fn default_valuation() -> ValuationParams {
    ValuationParams { kappa: 4.0, alpha: 0.0 }
}
fn default_cost_kind() -> CostKind {
    CostKind::Uniform
}
fn default_delta_c() -> f64 {
    0.5
}
fn default_rho() -> f64 {
    1.0
}
fn default_iterations() -> u64 {
    50
}
fn default_mechanisms() -> Vec<MechanismKind> {
    MechanismKind::all().to_vec()
}

/// Mechanism knobs; absent fields fall back to the library defaults.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MechanismSettings {
    pub gamma_grid: Option<Vec<f64>>,
    pub tau: Option<f64>,
    pub mc_iterations: Option<u64>,
    pub exact_cap: Option<usize>,
    pub budget: Option<f64>,
}

/// A full experiment: world parameters, mechanisms, iteration count,
/// master seed. Unknown fields are rejected.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default = "default_area")]
    pub area_km: f64,
    #[serde(default = "default_resolution")]
    pub grid_resolution_km: f64,
    pub n_users: usize,
    #[serde(default = "default_kernel")]
    pub kernel: KernelSpec,
    #[serde(default = "default_valuation")]
    pub valuation: ValuationParams,
    #[serde(default = "default_cost_kind")]
    pub cost_kind: CostKind,
    #[serde(default = "default_delta_c")]
    pub delta_c: f64,
    #[serde(default = "default_rho")]
    pub rho: f64,
    /// Optional minimum spacing between users, km.
    #[serde(default)]
    pub min_user_distance_km: Option<f64>,
    #[serde(default = "default_mechanisms")]
    pub mechanisms: Vec<MechanismKind>,
    #[serde(default)]
    pub mechanism: MechanismSettings,
    #[serde(default = "default_iterations")]
    pub iterations: u64,
    pub seed: u64,
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self, serde_json::Error> {
        let cfg: ExperimentConfig = serde_json::from_str(text)?;
        cfg.validate().map_err(serde::de::Error::custom)?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), String> {
        if self.n_users == 0 {
            return Err("n_users must be at least 1".into());
        }
        if self.n_users > crate::field::MAX_USERS {
            return Err(format!("n_users exceeds the limit of {}", crate::field::MAX_USERS));
        }
        if !(self.rho > 0.0 && self.rho <= 1.0) {
            return Err("rho must lie in (0, 1]".into());
        }
        if self.delta_c <= 0.0 {
            return Err("delta_c must be positive".into());
        }
        if self.iterations == 0 {
            return Err("iterations must be at least 1".into());
        }
        if self.mechanisms.is_empty() {
            return Err("mechanisms must not be empty".into());
        }
        if let Some(grid) = &self.mechanism.gamma_grid {
            if grid.is_empty() || !grid.windows(2).all(|w| w[0] < w[1]) {
                return Err("gamma_grid must be non-empty and ascending".into());
            }
            if !grid.iter().all(|g| *g > 0.0 && *g <= 1.0) {
                return Err("gamma_grid values must lie in (0, 1]".into());
            }
        }
        Ok(())
    }

    /// The world this config describes (fully seed-determined).
    pub fn build_scenario(&self) -> Scenario {
        let locations = poisson_topology(
            self.area_km,
            self.n_users,
            self.seed,
            self.min_user_distance_km,
        );
        let users = generate_users(&locations, self.cost_kind, self.delta_c, self.rho, self.seed);
        Scenario {
            area_km: self.area_km,
            grid_resolution_km: self.grid_resolution_km,
            users,
            kernel: self.kernel,
            valuation: self.valuation,
            seed: self.seed,
        }
    }

    pub fn mechanism_config(&self) -> MechanismConfig {
        let mut c = MechanismConfig::new(self.seed);
        if let Some(grid) = &self.mechanism.gamma_grid {
            c.gamma_grid = grid.clone();
        }
        if let Some(tau) = self.mechanism.tau {
            c.tau = tau;
        }
        if let Some(iters) = self.mechanism.mc_iterations {
            c.mc_iterations = iters;
        }
        if let Some(cap) = self.mechanism.exact_cap {
            c.exact_cap = cap;
        }
        if let Some(b) = self.mechanism.budget {
            c.budget = b;
        }
        c
    }
}
