//! Acceptance suite: one criterion per test, one PASS/FAIL line each
//! (visible with `--nocapture`; a FAIL also fails the test).

use std::time::Instant;

use radiomap::cost::CostKind;
use radiomap::eu::{
    best_single_price, exact_eu, shifted_eu, EuEstimator, GammaPricing, OfferBatch, UserProfile,
};
use radiomap::field::{SiteField, SiteSubset};
use radiomap::rng::substream;
use radiomap::scenario::{
    build_grid_field, generate_users, poisson_topology, run_comparison, summarize, ComparisonRow,
    MechanismKind, Scenario,
};
use radiomap::submodular::{
    brute_force_budgeted_max, brute_force_max, greedy_knapsack, random_coverage_instance,
    random_cut_instance, usm_double_greedy, BudgetedInstance, SetFunctionOracle,
};
use radiomap::two_user::{
    best_joint_gamma, best_per_user_gammas, case_two_table, joint_eu, table_diagnostic,
    tutorial_users, CaseOneVariant, CASE2_V,
};
use radiomap::valuation::{CachedValue, GpValuation, ValuationParams};
use radiomap::mechanisms::MechanismConfig;
use radiomap::geo::KernelSpec;
use rand::Rng;

fn report(criterion: u32, label: &str, pass: bool, detail: &str, started: Instant) -> bool {
    println!(
        "criterion {criterion} {} {label}: {detail} ({:.2} s)",
        if pass { "PASS" } else { "FAIL" },
        started.elapsed().as_secs_f64()
    );
    pass
}

#[test]
fn criterion_1_two_user_algebra() {
    let started = Instant::now();
    let users = tutorial_users();
    let v = case_two_table();
    let mut ok = true;
    let mut notes: Vec<String> = Vec::new();

    let e1 = joint_eu(&users, &v, 0.25);
    let e2 = joint_eu(&users, &v, 0.75);
    let quad = (e1 / 0.25 - e2 / 0.75) / (0.25 - 0.75);
    let lin = e1 / 0.25 - quad * 0.25;
    ok &= (quad + 2.59).abs() <= 1e-6 && (lin - 2.91).abs() <= 1e-6;

    let (p1, g1) = best_single_price(CASE2_V[0], &users[0].cost_dist);
    ok &= (users[0].cost_dist.cdf(p1) - 0.59).abs() <= 0.01 && (g1 - 0.3481).abs() <= 0.005;
    let (p2, g2) = best_single_price(CASE2_V[1], &users[1].cost_dist);
    ok &= (users[1].cost_dist.cdf(p2) - 0.865).abs() <= 0.01 && (g2 - 0.748).abs() <= 0.005;

    let (gj, euj) = best_joint_gamma(&users, &v);
    ok &= (gj - 0.562).abs() <= 0.01 && (euj - 0.817).abs() <= 0.005;
    notes.push(format!("joint γ* {gj:.3}/EU {euj:.4}"));

    // single-batch selection on a fine grid recovers the joint optimum
    let grid: Vec<f64> = (1..=100).map(|k| k as f64 / 100.0).collect();
    let config = MechanismConfig::new(0).with_gamma_grid(grid);
    let sel = radiomap::mechanisms::single_batch_offering(
        &users,
        &v,
        &config,
        &SiteSubset::full(2),
        &SiteSubset::EMPTY,
    );
    ok &= sel.batch.subset() == SiteSubset::full(2)
        && (sel.gamma_star - 0.562).abs() <= 0.01
        && (sel.estimate - 0.817).abs() <= 0.005;

    let ((ga, gb), eup) = best_per_user_gammas(&users, &v);
    ok &= (ga - 0.37).abs() <= 0.01 && (gb - 0.76).abs() <= 0.01 && (eup - 0.87).abs() <= 0.005;
    notes.push(format!("per-user ({ga:.2}, {gb:.2})/EU {eup:.3}"));

    let runtime_ok = started.elapsed().as_secs_f64() < 1.0;
    let pass = report(
        1,
        "two-user algebra",
        ok && runtime_ok,
        &notes.join(", "),
        started,
    );
    assert!(pass);
}

#[test]
fn criterion_2_valuation_diagnostic() {
    let started = Instant::now();
    let mut worst = 0.0f64;
    for variant in [CaseOneVariant::Upper, CaseOneVariant::Lower] {
        for row in table_diagnostic(variant) {
            assert!(row.computed.is_finite());
            worst = worst.max(row.residual().abs());
        }
    }
    // diagnostic only: residuals are reported, never gated
    let within = worst <= 0.15;
    report(
        2,
        "valuation diagnostic",
        true,
        &format!(
            "worst residual {worst:.4}, {} the 0.15 target (non-gating)",
            if within { "within" } else { "outside" }
        ),
        started,
    );
}

/// Small world for EU-oracle instances: n well-separated users over a
/// dense 8×8 grid in a 2 km box. The grid is dense relative to the user
/// spacing, which keeps the valuation monotone submodular — the premise
/// behind the EU submodularity and USM-on-EU′ properties.
fn eu_instance(seed: u64, n: usize) -> (SiteField, Vec<UserProfile>) {
    let locs = poisson_topology(2.0, n, seed, Some(0.4));
    let users = generate_users(&locs, CostKind::Uniform, 0.5, 1.0, seed);
    let sites = users.iter().map(|u| (u.location, u.noise_variance)).collect();
    let field = build_grid_field(sites, 2.0, 0.25, KernelSpec::new(15.5, 0.7))
        .expect("instance field is well-conditioned");
    (field, users)
}

/// Exact shifted-EU′ table over all subsets of `n` users.
fn shifted_eu_table(seed: u64, n: usize, gamma: f64) -> Vec<f64> {
    let (field, users) = eu_instance(seed, n);
    let v = CachedValue::new(GpValuation::new(&field, ValuationParams::new(4.0, 0.0)));
    let exact = EuEstimator::new(n, 1, 0);
    let (oracle, _) = shifted_eu(&v, &users, GammaPricing::new(gamma), exact);
    (0u64..1 << n)
        .map(|m| oracle.eval(&SiteSubset::from_mask(m)))
        .collect()
}

#[test]
fn criterion_3_usm_third_bound() {
    let started = Instant::now();
    let mut rng = substream(3, "acceptance", 0);
    let mut ok = true;
    let mut worst = f64::INFINITY;

    for trial in 0..200u32 {
        let n = 4 + (trial as usize % 7); // n ≤ 10
        let (alg, opt) = if trial % 2 == 0 {
            let f = random_coverage_instance(n, &mut rng);
            let o = f.oracle();
            (o.eval(&usm_double_greedy(&o)), brute_force_max(&o, n).unwrap().1)
        } else {
            let f = random_cut_instance(n, &mut rng);
            let o = f.oracle();
            (o.eval(&usm_double_greedy(&o)), brute_force_max(&o, n).unwrap().1)
        };
        ok &= alg >= opt / 3.0 - 1e-9;
        if opt > 0.0 {
            worst = worst.min(alg / opt);
        }
    }

    for trial in 0..50u64 {
        let n = 4 + (trial as usize % 5); // n ≤ 8
        let gamma = 0.2 + 0.15 * (trial % 5) as f64;
        let table = shifted_eu_table(500 + trial, n, gamma);
        let oracle = SetFunctionOracle::new(n, |a: &SiteSubset| table[a.mask() as usize]);
        let alg = oracle.eval(&usm_double_greedy(&oracle));
        let opt = brute_force_max(&oracle, n).unwrap().1;
        ok &= alg >= opt / 3.0 - 1e-9;
        if opt > 0.0 {
            worst = worst.min(alg / opt);
        }
    }

    let runtime_ok = started.elapsed().as_secs_f64() < 30.0;
    let pass = report(
        3,
        "USM 1/3 bound",
        ok && runtime_ok,
        &format!("250 instances, worst ratio {worst:.3}"),
        started,
    );
    assert!(pass);
}

#[test]
fn criterion_4_noisy_oracle_bound() {
    let started = Instant::now();
    let mut rng = substream(4, "acceptance", 0);
    let mut ok = true;
    let mut worst_slack = f64::INFINITY;

    for trial in 0..10u64 {
        let n = 4 + (trial as usize % 5); // n ≤ 8
        let table = shifted_eu_table(900 + trial, n, 0.4);
        let true_oracle = SetFunctionOracle::new(n, |a: &SiteSubset| table[a.mask() as usize]);
        let opt = brute_force_max(&true_oracle, n).unwrap().1;
        for &eps in &[0.01, 0.05] {
            let bound = opt / 3.0 - (2.0 * n as f64 + 2.0) * eps / 3.0;
            for _perturbation in 0..50 {
                // worst of 50 random ±ε perturbations
                let noisy: Vec<f64> = table
                    .iter()
                    .map(|t| t + if rng.gen::<bool>() { eps } else { -eps })
                    .collect();
                let noisy_oracle =
                    SetFunctionOracle::new(n, |a: &SiteSubset| noisy[a.mask() as usize]);
                let alg_set = usm_double_greedy(&noisy_oracle);
                let achieved = table[alg_set.mask() as usize];
                ok &= achieved >= bound - 1e-9;
                worst_slack = worst_slack.min(achieved - bound);
            }
        }
    }

    let runtime_ok = started.elapsed().as_secs_f64() < 60.0;
    let pass = report(
        4,
        "noisy-oracle bound",
        ok && runtime_ok,
        &format!("10 instances × 2 ε × 50 perturbations, worst slack {worst_slack:.4}"),
        started,
    );
    assert!(pass);
}

#[test]
fn criterion_5_gs_bound() {
    let started = Instant::now();
    let mut rng = substream(5, "acceptance", 0);
    let mut ok = true;
    let mut worst = f64::INFINITY;
    for trial in 0..100u32 {
        let n = 5 + (trial as usize % 8); // n ≤ 12
        let f = random_coverage_instance(n, &mut rng);
        let prices: Vec<f64> = (0..n).map(|_| 0.2 + rng.gen::<f64>()).collect();
        let budget = prices.iter().sum::<f64>() * (0.25 + 0.5 * rng.gen::<f64>());
        let opt = brute_force_budgeted_max(&f.oracle(), &prices, budget)
            .unwrap()
            .1;
        let inst = BudgetedInstance::new(f.oracle(), prices, budget);
        let alg = inst.oracle.eval(&greedy_knapsack(&inst));
        ok &= alg >= 0.39 * opt - 1e-9;
        if opt > 0.0 {
            worst = worst.min(alg / opt);
        }
    }
    let runtime_ok = started.elapsed().as_secs_f64() < 60.0;
    let pass = report(
        5,
        "GS 0.39 bound",
        ok && runtime_ok,
        &format!("100 instances, worst ratio {worst:.3}"),
        started,
    );
    assert!(pass);
}

/// All diminishing-returns triples (A ⊆ B, i ∉ B) on a mask-indexed
/// table; returns the worst violation `gain(B) − gain(A)`.
fn worst_dr_violation(table: &[f64], n: usize) -> f64 {
    let mut worst = 0.0f64;
    for b_mask in 0u64..1 << n {
        for i in 0..n {
            if b_mask & (1 << i) != 0 {
                continue;
            }
            let gain_b = table[(b_mask | 1 << i) as usize] - table[b_mask as usize];
            let mut a_mask = b_mask;
            loop {
                let gain_a = table[(a_mask | 1 << i) as usize] - table[a_mask as usize];
                worst = worst.max(gain_b - gain_a);
                if a_mask == 0 {
                    break;
                }
                a_mask = (a_mask - 1) & b_mask;
            }
        }
    }
    worst
}

#[test]
fn criterion_6_mi_chain_rule_and_submodularity() {
    let started = Instant::now();
    let mut worst_chain = 0.0f64;
    let mut worst_dr = 0.0f64;
    for trial in 0..50u64 {
        let n = 4 + (trial as usize % 5); // |S| ≤ 8
        // 3 km box at 0.45 km resolution → 36 grid sites (|U| ≈ 40)
        let locs = poisson_topology(3.0, n, 600 + trial, Some(0.05));
        let users = generate_users(&locs, CostKind::Uniform, 0.5, 1.0, 600 + trial);
        let sites = users.iter().map(|u| (u.location, u.noise_variance)).collect();
        let field = build_grid_field(sites, 3.0, 0.45, KernelSpec::new(15.5, 0.7))
            .expect("field is well-conditioned");
        let mi: Vec<f64> = (0u64..1 << n)
            .map(|m| field.mutual_information(&SiteSubset::from_mask(m)).unwrap())
            .collect();
        for mask in 0u64..1 << n {
            let a = SiteSubset::from_mask(mask);
            for i in 0..n {
                if a.contains(i) {
                    continue;
                }
                let lhs = mi[(mask | 1 << i) as usize] - mi[mask as usize];
                let rhs = field.marginal_mi(i, &a).unwrap();
                worst_chain = worst_chain.max((lhs - rhs).abs() / lhs.abs().max(1.0));
            }
        }
        worst_dr = worst_dr.max(worst_dr_violation(&mi, n));
    }
    let ok = worst_chain <= 1e-8 && worst_dr <= 1e-9;
    let runtime_ok = started.elapsed().as_secs_f64() < 60.0;
    let pass = report(
        6,
        "MI chain rule + submodularity",
        ok && runtime_ok,
        &format!("50 fields, chain residual {worst_chain:.2e}, DR violation {worst_dr:.2e}"),
        started,
    );
    assert!(pass);
}

#[test]
fn criterion_7_eu_submodularity() {
    let started = Instant::now();
    let mut worst = 0.0f64;
    for (trial, n) in [(0u64, 6usize), (1, 7), (2, 8)] {
        let (field, users) = eu_instance(700 + trial, n);
        let v = CachedValue::new(GpValuation::new(&field, ValuationParams::new(4.0, 0.0)));
        let pricing = GammaPricing::new(0.6);
        let eu: Vec<f64> = (0u64..1 << n)
            .map(|m| {
                let batch = OfferBatch::for_gamma(&users, &SiteSubset::from_mask(m), pricing);
                exact_eu(&v, &batch).unwrap()
            })
            .collect();
        worst = worst.max(worst_dr_violation(&eu, n));
    }
    let pass = report(
        7,
        "EU submodularity",
        worst <= 1e-9,
        &format!("3 exact instances (n ≤ 8), worst DR violation {worst:.2e}"),
        started,
    );
    assert!(pass);
}

#[test]
fn criterion_8_mc_convergence() {
    let started = Instant::now();
    let mut ok = true;
    let mut worst_z = 0.0f64;
    for trial in 0..20u64 {
        let (field, users) = eu_instance(800 + trial, 8);
        let v = CachedValue::new(GpValuation::new(&field, ValuationParams::new(4.0, 0.0)));
        let batch = OfferBatch::for_gamma(&users, &SiteSubset::full(8), GammaPricing::new(0.5));
        let exact = exact_eu(&v, &batch).unwrap();

        // exact single-draw variance by outcome enumeration
        let probs = batch.recruit_probs();
        let offers = batch.offers();
        let mut second_moment = 0.0;
        for mask in 0u64..1 << offers.len() {
            let mut prob = 1.0;
            let mut set = SiteSubset::EMPTY;
            let mut paid = 0.0;
            for (j, o) in offers.iter().enumerate() {
                if mask >> j & 1 == 1 {
                    prob *= probs[j];
                    set = set.with(o.user);
                    paid += o.price;
                } else {
                    prob *= 1.0 - probs[j];
                }
            }
            let u = radiomap::valuation::ValueFn::value(&v, &set) - paid;
            second_moment += prob * u * u;
        }
        let sigma = ((second_moment - exact * exact) / 50_000.0).sqrt();

        let est = EuEstimator::new(0, 50_000, 808 + trial); // force the MC path
        let mc = est.eu(&v, &batch);
        ok &= (mc - exact).abs() <= 3.0 * sigma;
        worst_z = worst_z.max((mc - exact).abs() / sigma);
        // bitwise determinism per seed
        ok &= mc == est.eu(&v, &batch) && mc == EuEstimator::new(0, 50_000, 808 + trial).eu(&v, &batch);
    }
    let pass = report(
        8,
        "MC convergence",
        ok,
        &format!("20 instances at 50 000 iterations, worst |z| {worst_z:.2}"),
        started,
    );
    assert!(pass);
}

fn desk_scenario(n: usize, rho: f64, seed: u64) -> Scenario {
    let locs = poisson_topology(6.0, n, seed, None);
    let users = generate_users(&locs, CostKind::Uniform, 0.5, rho, seed);
    Scenario {
        area_km: 6.0,
        grid_resolution_km: 0.45,
        users,
        kernel: KernelSpec::new(15.5, 0.7),
        valuation: ValuationParams::new(4.0, 0.0),
        seed,
    }
}

fn mean_utility(rows: &[ComparisonRow], kind: MechanismKind) -> f64 {
    summarize(rows)
        .into_iter()
        .find(|s| s.mechanism == kind)
        .expect("mechanism present")
        .mean_utility
}

#[test]
fn criterion_9_trend_reproduction() {
    let started = Instant::now();
    let seed = 20260824u64;
    let config = MechanismConfig::new(0);
    let mechanisms = MechanismKind::all();
    let mut ok = true;
    let mut notes: Vec<String> = Vec::new();

    let rows = run_comparison(&desk_scenario(30, 1.0, seed), mechanisms, &config, 50).unwrap();
    let sums = summarize(&rows);
    let batches = |kind: MechanismKind| {
        sums.iter()
            .find(|s| s.mechanism == kind)
            .unwrap()
            .mean_batches
    };

    // (a) EU-driven single batch beats the best-case baseline
    let sb_eu = mean_utility(&rows, MechanismKind::SingleBatchEu);
    let sb_u = mean_utility(&rows, MechanismKind::SingleBatchU);
    ok &= sb_eu >= sb_u;
    notes.push(format!("SB-EU {sb_eu:.3} vs SB-u {sb_u:.3}"));

    // (b) batch counts: MB-EU < MB-u < sequential
    let (mb_eu, mb_u, se) = (
        batches(MechanismKind::MultiBatchEu),
        batches(MechanismKind::MultiBatchU),
        batches(MechanismKind::Sequential),
    );
    ok &= mb_eu < mb_u && mb_u < se;
    notes.push(format!("batches {mb_eu:.1} < {mb_u:.1} < {se:.1}"));

    // (c) the best single batch never prices at the support top
    ok &= rows
        .iter()
        .filter(|r| r.mechanism == MechanismKind::SingleBatchEu)
        .all(|r| r.gamma_star.is_some_and(|g| g < 1.0));

    // Nondecreasing mean utility along a sweep. Strict for sequential
    // and the EU-driven mechanisms; the best-case-price baselines get a
    // paired 2·stderr slack — their per-seed curves genuinely dip when
    // extra users mislead the accept-everything oracle, and the claim
    // being checked is a trend on means, not a per-seed inequality.
    let mut check_sweep = |label: &str, sweeps: &[Vec<ComparisonRow>]| {
        for &kind in mechanisms {
            let points: Vec<(f64, f64)> = sweeps
                .iter()
                .map(|rows| {
                    let s = summarize(rows)
                        .into_iter()
                        .find(|s| s.mechanism == kind)
                        .unwrap();
                    (s.mean_utility, s.stderr_utility)
                })
                .collect();
            let strict = matches!(
                kind,
                MechanismKind::Sequential
                    | MechanismKind::SingleBatchEu
                    | MechanismKind::MultiBatchEu
            );
            let monotone = points.windows(2).all(|w| {
                let slack = if strict { 0.0 } else { 2.0 * (w[0].1 + w[1].1) };
                w[1].0 >= w[0].0 - slack
            });
            ok &= monotone;
            if !monotone {
                notes.push(format!("{label} not monotone for {}: {points:?}", kind.label()));
            }
        }
    };

    // (d) mean utility nondecreasing in ρ
    let rho_rows: Vec<Vec<ComparisonRow>> = [0.2, 0.4, 0.6, 0.8, 1.0]
        .iter()
        .map(|&rho| run_comparison(&desk_scenario(30, rho, seed), mechanisms, &config, 50).unwrap())
        .collect();
    check_sweep("ρ-sweep", &rho_rows);

    // (e) mean utility nondecreasing in n
    let n_rows: Vec<Vec<ComparisonRow>> = [10, 20, 30, 40, 50, 60]
        .iter()
        .map(|&n| run_comparison(&desk_scenario(n, 1.0, seed), mechanisms, &config, 50).unwrap())
        .collect();
    check_sweep("n-sweep", &n_rows);

    let runtime_ok = started.elapsed().as_secs_f64() < 900.0;
    let pass = report(
        9,
        "trend reproduction",
        ok && runtime_ok,
        &notes.join("; "),
        started,
    );
    assert!(pass);
}
