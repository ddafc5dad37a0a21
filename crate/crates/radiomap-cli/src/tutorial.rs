//! The two-user worked example: valuation diagnostic plus the γ*
//! algebra suite. Only the algebra suite gates the exit status.

use radiomap::eu::best_single_price;
use radiomap::field::SiteSubset;
use radiomap::mechanisms::{accept_all, run_single_batch, MechanismConfig};
use radiomap::two_user::{
    best_joint_gamma, best_per_user_gammas, case_one_table, case_two_table, joint_eu,
    model_one_valuation, table_diagnostic, tutorial_users, CaseOneVariant, CASE2_V,
};
use radiomap::valuation::{TableValuation, ValueFn};

use crate::CliError;

const GAMMA_TOL: f64 = 0.01;
const EU_TOL: f64 = 0.005;

struct Check {
    label: &'static str,
    detail: String,
    pass: bool,
}

fn check(label: &'static str, computed: f64, expect: f64, tol: f64) -> Check {
    Check {
        label,
        detail: format!("{computed:.4} (expected {expect} ± {tol})"),
        pass: (computed - expect).abs() <= tol,
    }
}

pub fn run(case_one_lower: bool) -> Result<(), CliError> {
    let variant = if case_one_lower {
        CaseOneVariant::Lower
    } else {
        CaseOneVariant::Upper
    };

    println!("valuation diagnostic (kappa = 10, natural log; not gating):");
    let mut worst = 0.0f64;
    for row in table_diagnostic(variant) {
        let res = row.residual();
        worst = worst.max(res.abs());
        println!(
            "  {:15} computed {:7.4}  reference {:5.2}  residual {:+.4}",
            row.label, row.computed, row.reference, res
        );
    }
    println!(
        "  worst residual {:.4} — {}",
        worst,
        if worst <= 0.15 {
            "within the 0.15 target"
        } else {
            "outside the 0.15 target (diagnostic only)"
        }
    );
    println!();

    let users = tutorial_users();
    let v2 = case_two_table();
    let mut checks: Vec<Check> = Vec::new();

    // joint curve EU(γ) = 2.91γ − 2.59γ²: recover coefficients from two points
    let e1 = joint_eu(&users, &v2, 0.25);
    let e2 = joint_eu(&users, &v2, 0.75);
    let quad = (e1 / 0.25 - e2 / 0.75) / (0.25 - 0.75);
    let lin = e1 / 0.25 - quad * 0.25;
    checks.push(check("joint curve γ² coefficient", quad, -2.59, 1e-6));
    checks.push(check("joint curve γ coefficient", lin, 2.91, 1e-6));

    let (p1, g1) = best_single_price(CASE2_V[0], &users[0].cost_dist);
    checks.push(check("γ*₁ (user 1 alone)", users[0].cost_dist.cdf(p1), 0.59, GAMMA_TOL));
    checks.push(check("EU*₁", g1, 0.3481, EU_TOL));
    let (p2, g2) = best_single_price(CASE2_V[1], &users[1].cost_dist);
    checks.push(check("γ*₂ (user 2 alone)", users[1].cost_dist.cdf(p2), 0.865, GAMMA_TOL));
    checks.push(check("EU*₂", g2, 0.748225, EU_TOL));

    let (gj, euj) = best_joint_gamma(&users, &v2);
    checks.push(check("joint γ*", gj, 0.562, GAMMA_TOL));
    checks.push(check("joint EU*", euj, 0.8174, EU_TOL));

    let ((ga, gb), eup) = best_per_user_gammas(&users, &v2);
    checks.push(check("per-user γ*₁", ga, 0.37, GAMMA_TOL));
    checks.push(check("per-user γ*₂", gb, 0.76, GAMMA_TOL));
    checks.push(check("per-user EU*", eup, 0.87, EU_TOL));

    // single-batch mechanism on a fine γ grid recovers the joint optimum
    let grid: Vec<f64> = (1..=100).map(|k| k as f64 / 100.0).collect();
    let config = MechanismConfig::new(0).with_gamma_grid(grid);
    let t = run_single_batch(&users, &v2, &config, &mut accept_all());
    let offered = t
        .rounds
        .iter()
        .fold(SiteSubset::EMPTY, |acc, r| acc.union(&r.batch.subset()));
    checks.push(Check {
        label: "single batch offers both users",
        detail: format!("offered {:?}", offered.members()),
        pass: offered == SiteSubset::full(2),
    });
    checks.push(check(
        "single batch γ*",
        t.gamma_star.unwrap_or(f64::NAN),
        0.562,
        GAMMA_TOL,
    ));

    // deterministic costs c₁=2, c₂=1.5: A* = {2} under all three tables
    let costs = [2.0, 1.5];
    let mut det_ok = true;
    let tables: [Box<dyn ValueFn>; 3] = [
        Box::new(model_one_valuation()),
        Box::new(case_one_table()),
        Box::new(case_two_table()),
    ];
    for v in &tables {
        let u = |mask: u64| {
            let a = SiteSubset::from_mask(mask);
            v.value(&a) - a.iter().map(|i| costs[i]).sum::<f64>()
        };
        let best = (0u64..4).max_by(|x, y| u(*x).total_cmp(&u(*y))).unwrap();
        det_ok &= best == 0b10;
    }
    checks.push(Check {
        label: "deterministic costs pick A* = {2}",
        detail: "all three valuation tables".into(),
        pass: det_ok,
    });

    // degenerate zero valuation: nothing is worth an offer
    let zero = TableValuation::new(2, [(0b01, 0.0), (0b10, 0.0), (0b11, 0.0)]);
    let t0 = run_single_batch(&users, &zero, &MechanismConfig::new(0), &mut accept_all());
    checks.push(Check {
        label: "zero valuation sends no offers",
        detail: format!("{} offers", t0.offer_count()),
        pass: t0.offer_count() == 0,
    });

    println!("algebra suite:");
    let mut failed = 0;
    for c in &checks {
        println!(
            "  {} {:32} {}",
            if c.pass { "PASS" } else { "FAIL" },
            c.label,
            c.detail
        );
        if !c.pass {
            failed += 1;
        }
    }
    if failed > 0 {
        return Err(CliError {
            code: 1,
            message: format!("{failed} algebra check(s) failed"),
        });
    }
    println!("all {} algebra checks passed", checks.len());
    Ok(())
}
