//! Fast property suites: approximation bounds, information-theoretic
//! identities, and Monte-Carlo sanity. One summary line per suite.

use radiomap::eu::{exact_eu, EuEstimator, GammaPricing, OfferBatch};
use radiomap::field::{SiteField, SiteSubset};
use radiomap::rng::substream;
use radiomap::scenario::{build_grid_field, generate_users, poisson_topology};
use radiomap::submodular::{
    brute_force_budgeted_max, brute_force_max, greedy_knapsack, random_coverage_instance,
    random_cut_instance, usm_double_greedy, BudgetedInstance,
};
use radiomap::valuation::{GpValuation, ValuationParams};
use rand::Rng;

use crate::CliError;

struct Suite {
    label: &'static str,
    detail: String,
    pass: bool,
}

pub fn run() -> Result<(), CliError> {
    let suites = vec![
        usm_third_bound(),
        gs_bound(),
        mi_identities(),
        eu_submodularity(),
        mc_sanity(),
    ];
    let mut failed = 0;
    for s in &suites {
        println!(
            "{} {:24} {}",
            if s.pass { "PASS" } else { "FAIL" },
            s.label,
            s.detail
        );
        if !s.pass {
            failed += 1;
        }
    }
    if failed > 0 {
        return Err(CliError {
            code: 1,
            message: format!("{failed} self-test suite(s) failed"),
        });
    }
    Ok(())
}

fn usm_third_bound() -> Suite {
    let mut rng = substream(2024, "selftest", 0);
    let mut worst = f64::INFINITY;
    let mut ok = true;
    for trial in 0..80u32 {
        let n = 4 + (trial as usize % 7);
        let (alg, opt) = if trial % 2 == 0 {
            let f = random_coverage_instance(n, &mut rng);
            let oracle = f.oracle();
            let alg = oracle.eval(&usm_double_greedy(&oracle));
            (alg, brute_force_max(&oracle, n).unwrap().1)
        } else {
            let f = random_cut_instance(n, &mut rng);
            let oracle = f.oracle();
            let alg = oracle.eval(&usm_double_greedy(&oracle));
            (alg, brute_force_max(&oracle, n).unwrap().1)
        };
        if opt > 0.0 {
            worst = worst.min(alg / opt);
        }
        ok &= alg >= opt / 3.0 - 1e-9;
    }
    Suite {
        label: "usm-third-bound",
        detail: format!("80 instances, worst ratio {worst:.3} (bound 0.333)"),
        pass: ok,
    }
}

fn gs_bound() -> Suite {
    let mut rng = substream(2024, "selftest", 1);
    let mut worst = f64::INFINITY;
    let mut ok = true;
    for trial in 0..30u32 {
        let n = 5 + (trial as usize % 8);
        let f = random_coverage_instance(n, &mut rng);
        let prices: Vec<f64> = (0..n).map(|_| 0.2 + rng.gen::<f64>()).collect();
        let budget = prices.iter().sum::<f64>() * (0.3 + 0.4 * rng.gen::<f64>());
        let opt = brute_force_budgeted_max(&f.oracle(), &prices, budget)
            .unwrap()
            .1;
        let inst = BudgetedInstance::new(f.oracle(), prices, budget);
        let alg = inst.oracle.eval(&greedy_knapsack(&inst));
        if opt > 0.0 {
            worst = worst.min(alg / opt);
        }
        ok &= alg >= 0.39 * opt - 1e-9;
    }
    Suite {
        label: "gs-bound",
        detail: format!("30 instances, worst ratio {worst:.3} (bound 0.39)"),
        pass: ok,
    }
}

fn random_field(seed: u64) -> SiteField {
    let locs = poisson_topology(3.0, 6, seed, Some(0.05));
    let users = generate_users(&locs, radiomap::cost::CostKind::Uniform, 0.5, 1.0, seed);
    let sites = users.iter().map(|u| (u.location, u.noise_variance)).collect();
    build_grid_field(sites, 3.0, 0.6, radiomap::geo::KernelSpec::new(15.5, 0.7))
        .expect("random field is well-conditioned")
}

fn mi_identities() -> Suite {
    let mut worst_chain = 0.0f64;
    let mut worst_dr = 0.0f64;
    for seed in 0..8u64 {
        let field = random_field(100 + seed);
        let n = field.n_users();
        let mi: Vec<f64> = (0u64..1 << n)
            .map(|m| field.mutual_information(&SiteSubset::from_mask(m)).unwrap())
            .collect();
        // chain rule: MI(A∪{i}) − MI(A) = marginal_mi(i, A)
        for mask in 0u64..1 << n {
            let a = SiteSubset::from_mask(mask);
            for i in 0..n {
                if a.contains(i) {
                    continue;
                }
                let lhs = mi[(mask | 1 << i) as usize] - mi[mask as usize];
                let rhs = field.marginal_mi(i, &a).unwrap();
                let rel = (lhs - rhs).abs() / lhs.abs().max(1.0);
                worst_chain = worst_chain.max(rel);
            }
        }
        // diminishing returns over all A ⊆ B, i ∉ B
        for b_mask in 0u64..1 << n {
            for i in 0..n {
                if b_mask & (1 << i) != 0 {
                    continue;
                }
                let gain_b = mi[(b_mask | 1 << i) as usize] - mi[b_mask as usize];
                let mut a_mask = b_mask;
                loop {
                    let gain_a = mi[(a_mask | 1 << i) as usize] - mi[a_mask as usize];
                    worst_dr = worst_dr.max(gain_b - gain_a);
                    if a_mask == 0 {
                        break;
                    }
                    a_mask = (a_mask - 1) & b_mask;
                }
            }
        }
    }
    Suite {
        label: "mi-identities",
        detail: format!(
            "8 fields, chain-rule residual {worst_chain:.2e} (≤ 1e-8), DR violation {worst_dr:.2e} (≤ 1e-9)"
        ),
        pass: worst_chain <= 1e-8 && worst_dr <= 1e-9,
    }
}

fn eu_submodularity() -> Suite {
    let mut worst = 0.0f64;
    for seed in 0..2u64 {
        let field = random_field(200 + seed);
        let users = {
            let locs: Vec<_> = field.user_sites().iter().map(|s| s.0).collect();
            generate_users(&locs, radiomap::cost::CostKind::Uniform, 0.5, 1.0, 200 + seed)
        };
        let v = GpValuation::new(&field, ValuationParams::new(4.0, 0.0));
        let n = users.len();
        let pricing = GammaPricing::new(0.5);
        let eu: Vec<f64> = (0u64..1 << n)
            .map(|m| {
                let batch = OfferBatch::for_gamma(&users, &SiteSubset::from_mask(m), pricing);
                exact_eu(&v, &batch).unwrap()
            })
            .collect();
        for b_mask in 0u64..1 << n {
            for i in 0..n {
                if b_mask & (1 << i) != 0 {
                    continue;
                }
                let gain_b = eu[(b_mask | 1 << i) as usize] - eu[b_mask as usize];
                let mut a_mask = b_mask;
                loop {
                    let gain_a = eu[(a_mask | 1 << i) as usize] - eu[a_mask as usize];
                    worst = worst.max(gain_b - gain_a);
                    if a_mask == 0 {
                        break;
                    }
                    a_mask = (a_mask - 1) & b_mask;
                }
            }
        }
    }
    Suite {
        label: "eu-submodularity",
        detail: format!("2 instances, worst DR violation {worst:.2e} (≤ 1e-9)"),
        pass: worst <= 1e-9,
    }
}

fn mc_sanity() -> Suite {
    let field = random_field(300);
    let users = {
        let locs: Vec<_> = field.user_sites().iter().map(|s| s.0).collect();
        generate_users(&locs, radiomap::cost::CostKind::Uniform, 0.5, 1.0, 300)
    };
    let v = GpValuation::new(&field, ValuationParams::new(4.0, 0.0));
    let batch = OfferBatch::for_gamma(&users, &SiteSubset::full(users.len()), GammaPricing::new(0.6));
    let exact = exact_eu(&v, &batch).unwrap();
    // force the MC path with a zero exact cap
    let est = EuEstimator::new(0, 20_000, 7);
    let a = est.eu(&v, &batch);
    let b = est.eu(&v, &batch);
    let deterministic = a == b;
    let close = (a - exact).abs() <= 0.1;
    Suite {
        label: "mc-sanity",
        detail: format!("mc {a:.4} vs exact {exact:.4}, repeat bitwise {deterministic}"),
        pass: deterministic && close,
    }
}
