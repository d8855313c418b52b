//! Acceptance suite: one pass/fail line per criterion, non-zero exit if any
//! criterion fails.

mod common;

use std::process::{Command, ExitCode};
use std::time::Instant;

use common::*;
use privmarket::dynamics::{default_initial_benefit, Trajectory};
use privmarket::efficiency::{audit_many, MarketAudit};
use privmarket::{
    best_response, individual_rationality, poa_sweep, recommend_step_size, run_competitive_bidding,
    run_oligopoly_bidding, solve_one, solve_pce, Execution, MarketError, MarketScenario, Tolerance,
};

type Criterion<'a> = (&'static str, Box<dyn Fn() -> Outcome + 'a>);

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome {
        pass,
        detail: detail.into(),
    }
}

struct Suite {
    scenarios: Vec<MarketScenario>,
    audits: Vec<MarketAudit>,
}

impl Suite {
    fn build() -> Suite {
        let scenarios = random_suite(SUITE_SEED, SUITE_SIZE);
        let audits = audit_many(&scenarios, Execution::default())
            .into_iter()
            .collect::<Result<Vec<_>, _>>()
            .expect("every random scenario has both equilibria");
        Suite { scenarios, audits }
    }

    fn pairs(&self) -> impl Iterator<Item = (usize, &MarketScenario, &MarketAudit)> {
        self.scenarios
            .iter()
            .zip(&self.audits)
            .enumerate()
            .map(|(k, (s, a))| (k, s, a))
    }
}

/// Competitive allocation equals the projected-gradient social-cost
/// minimizer within 1e-6 relative.
fn pce_oracle_equivalence(suite: &Suite) -> Outcome {
    let oracles = Execution::default().map(&suite.scenarios, projected_gradient_pce);
    let mut worst: f64 = 0.0;
    for ((_, _, audit), oracle) in suite.pairs().zip(&oracles) {
        for (&q, &o) in audit.pce.allocations.iter().zip(oracle) {
            worst = worst.max((q - o).abs() / o.abs().max(1.0));
        }
    }
    outcome(
        worst <= 1e-6,
        format!("max relative deviation {worst:.3e} (tol 1e-6)"),
    )
}

/// At the oligopolistic bid profile every holder's best response is its
/// own bid within 1e-6.
fn nash_verification(suite: &Suite) -> Outcome {
    let mut worst: f64 = 0.0;
    for (k, s, audit) in suite.pairs() {
        for i in 0..s.len() {
            let br = match best_response(s, i, &without(&audit.one.bids, i)) {
                Ok(br) => br,
                Err(e) => return outcome(false, format!("scenario {k} holder {i}: {e}")),
            };
            worst = worst.max((br.bid - audit.one.bids[i]).abs());
        }
    }
    outcome(
        worst <= 1e-6,
        format!("max bid deviation {worst:.3e} (tol 1e-6)"),
    )
}

/// Participation superset, benefit ordering and bounds, cost ordering and
/// the cost-ratio bound, all with 1e-9 slack.
fn efficiency_bounds(suite: &Suite) -> Outcome {
    let slack = |x: f64| 1e-9 * x.abs().max(1.0);
    let mut cost_bound_cases = 0;
    for (k, s, audit) in suite.pairs() {
        let (pce, one) = (&audit.pce, &audit.one);
        let n = s.len() as f64;
        let d = s.demand();
        let big_m = s
            .holders()
            .iter()
            .map(|c| c.a() + 2.0 * c.h() * d / n)
            .fold(f64::MIN, f64::max);
        let small_m = s
            .holders()
            .iter()
            .map(|c| c.a() + 2.0 * c.h() * d / n)
            .fold(f64::MAX, f64::min);
        let superset = pce
            .participants
            .iter()
            .all(|i| one.participants.contains(i));
        let ceiling = (n - 1.0) / (n - 2.0) * big_m;
        let mut ok = superset
            && pce.benefit <= one.benefit + slack(one.benefit)
            && one.benefit <= ceiling + slack(ceiling)
            && pce.benefit >= small_m - slack(small_m)
            && pce.total_cost <= one.total_cost + slack(one.total_cost);
        let q_max = pce.allocations.iter().copied().fold(0.0, f64::max);
        if q_max < d / 2.0 {
            cost_bound_cases += 1;
            let bound = (1.0 + q_max / (d - 2.0 * q_max)) * pce.total_cost;
            ok &= one.total_cost <= bound + slack(bound);
        }
        ok &= audit.report.bounds_hold;
        if !ok {
            return outcome(
                false,
                format!("scenario {k} violates a bound: {:?}", audit.report.checks),
            );
        }
    }
    outcome(
        true,
        format!(
            "{} scenarios, cost-ratio bound applicable in {cost_bound_cases}",
            suite.audits.len()
        ),
    )
}

/// Identical holders: uniform split at both equilibria, unit cost ratio,
/// price ratio (n-1)/(n-2).
fn homogeneous_case() -> Outcome {
    let mut worst: f64 = 0.0;
    for &(a, h, d) in &[(0.1, 0.002, 2.0), (0.0, 0.5, 1.0), (0.7, 0.03, 7.5)] {
        for n in 3..=10 {
            let s = MarketScenario::quadratic(d, &vec![(a, h); n]).unwrap();
            let pce = solve_pce(&s).unwrap();
            let one = solve_one(&s).unwrap();
            let even = d / n as f64;
            let nf = n as f64;
            let deviations = [
                pce.allocations
                    .iter()
                    .map(|q| (q - even).abs())
                    .fold(0.0, f64::max),
                one.allocations
                    .iter()
                    .map(|q| (q - even).abs())
                    .fold(0.0, f64::max),
                (one.total_cost / pce.total_cost - 1.0).abs(),
                (one.benefit / pce.benefit - (nf - 1.0) / (nf - 2.0)).abs(),
            ];
            worst = deviations.iter().copied().fold(worst, f64::max);
        }
    }
    outcome(
        worst <= 1e-9,
        format!("max deviation {worst:.3e} (tol 1e-9)"),
    )
}

/// The worst-case family has a strictly increasing, unbounded cost ratio.
fn unbounded_efficiency_loss() -> Outcome {
    let r = [1.0, 10.0, 1e2, 1e3, 1e4, 1e6];
    let rows = match poa_sweep(&r, 1.0, 1.0) {
        Ok(rows) => rows,
        Err(e) => return outcome(false, e.to_string()),
    };
    let increasing = rows.windows(2).all(|w| w[1].cost_ratio > w[0].cost_ratio);
    let last = rows.last().unwrap().cost_ratio;
    let column: Vec<String> = rows
        .iter()
        .map(|r| format!("{:.4}", r.cost_ratio))
        .collect();
    outcome(
        increasing && last > 10.0,
        format!("cost ratios [{}]", column.join(", ")),
    )
}

fn tail_non_increasing(t: &Trajectory) -> bool {
    let start = t.records.len().saturating_sub(10);
    t.records[start..]
        .windows(2)
        .all(|w| w[1].supply_gap.abs() <= w[0].supply_gap.abs())
}

/// Both bidding loops converge to the exact equilibria within 1e-6 in at
/// most 1e4 iterations, with a decaying gap over the final 10 rounds.
fn dynamics_convergence() -> Outcome {
    let s = three_holder();
    let step = recommend_step_size(&s);
    let p0 = default_initial_benefit(&s);
    let tol = Tolerance::default();
    let mut details = Vec::new();
    let mut pass = true;
    let runs = [
        (
            "competitive",
            run_competitive_bidding(&s, p0, step, 10_000, tol),
            solve_pce(&s),
        ),
        (
            "oligopoly",
            run_oligopoly_bidding(&s, p0, step, 10_000, tol),
            solve_one(&s),
        ),
    ];
    for (name, run, exact) in runs {
        let (t, exact) = match (run, exact) {
            (Ok(t), Ok(e)) => (t, e),
            (Err(e), _) | (_, Err(e)) => return outcome(false, format!("{name}: {e}")),
        };
        let distance = max_abs_diff(&t.final_state.allocations, &exact.allocations)
            .max((t.final_state.benefit - exact.benefit).abs());
        let ok =
            t.converged && t.iterations() <= 10_000 && distance <= 1e-6 && tail_non_increasing(&t);
        pass &= ok;
        details.push(format!(
            "{name}: {} iters, distance {distance:.2e}",
            t.iterations()
        ));
    }
    outcome(pass, details.join("; "))
}

/// Two holders have no oligopolistic equilibrium, and oligopolistic
/// allocations stay below half the demand.
fn two_holder_guardrails(suite: &Suite) -> Outcome {
    let two = MarketScenario::quadratic(2.0, &[(0.1, 0.002), (0.2, 0.005)]).unwrap();
    let dynamics_rejects = matches!(
        run_oligopoly_bidding(&two, 0.2, 0.001, 100, Tolerance::default()),
        Err(MarketError::NoEquilibrium { holders: 2 })
    );
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("two.json");
    std::fs::write(
        &path,
        r#"{"demand": 2, "holders": [{"a": 0.1, "h": 0.002}, {"a": 0.2, "h": 0.005}]}"#,
    )
    .unwrap();
    let output = Command::new(env!("CARGO_BIN_EXE_privmarket"))
        .args(["one", "--scenario"])
        .arg(&path)
        .output()
        .expect("binary runs");
    let stderr = String::from_utf8_lossy(&output.stderr);
    let cli_rejects = output.status.code() == Some(3)
        && stderr.contains("no oligopolistic Nash equilibrium exists for two holders");
    let below_half = suite
        .pairs()
        .all(|(_, s, a)| a.one.allocations.iter().all(|&q| q < s.demand() / 2.0));
    outcome(
        dynamics_rejects && cli_rejects && below_half,
        format!("dynamics rejects: {dynamics_rejects}, cli exit 3: {cli_rejects}, q < d/2: {below_half}"),
    )
}

/// Net revenue is non-negative for every holder at both equilibria.
fn individual_rationality_holds(suite: &Suite) -> Outcome {
    let mut worst = f64::INFINITY;
    for (_, s, audit) in suite.pairs() {
        for result in [&audit.pce, &audit.one] {
            let net = individual_rationality(result, s).unwrap();
            worst = net.iter().copied().fold(worst, f64::min);
        }
    }
    outcome(worst >= -1e-12, format!("min net revenue {worst:.3e}"))
}

/// Scaling every cost by 0.1 or 10 leaves allocations and both ratios
/// unchanged.
fn scale_covariance(suite: &Suite) -> Outcome {
    let mut worst: f64 = 0.0;
    for (_, s, audit) in suite.pairs() {
        for lambda in [0.1, 10.0] {
            let scaled = s.scaled(lambda).unwrap();
            let pce = solve_pce(&scaled).unwrap();
            let one = solve_one(&scaled).unwrap();
            let price_ratio = one.benefit / pce.benefit;
            let cost_ratio = one.total_cost / pce.total_cost;
            worst = worst
                .max(max_abs_diff(&pce.allocations, &audit.pce.allocations))
                .max(max_abs_diff(&one.allocations, &audit.one.allocations))
                .max((price_ratio - audit.report.price_ratio).abs())
                .max((cost_ratio - audit.report.cost_ratio).abs());
        }
    }
    outcome(
        worst <= 1e-9,
        format!("max deviation {worst:.3e} (tol 1e-9)"),
    )
}

fn main() -> ExitCode {
    let started = Instant::now();
    let suite = Suite::build();
    let criteria: Vec<Criterion> = vec![
        (
            "1 PCE oracle equivalence",
            Box::new(|| pce_oracle_equivalence(&suite)),
        ),
        (
            "2 Nash verification",
            Box::new(|| nash_verification(&suite)),
        ),
        (
            "3 efficiency bounds",
            Box::new(|| efficiency_bounds(&suite)),
        ),
        ("4 homogeneous case", Box::new(homogeneous_case)),
        (
            "5 unbounded efficiency loss",
            Box::new(unbounded_efficiency_loss),
        ),
        ("6 dynamics convergence", Box::new(dynamics_convergence)),
        (
            "7 two-holder guardrails",
            Box::new(|| two_holder_guardrails(&suite)),
        ),
        (
            "8 individual rationality",
            Box::new(|| individual_rationality_holds(&suite)),
        ),
        ("9 scale covariance", Box::new(|| scale_covariance(&suite))),
    ];
    let mut failures = 0;
    for (name, check) in &criteria {
        let t = Instant::now();
        let result = check();
        if !result.pass {
            failures += 1;
        }
        println!(
            "[{}] {name}: {} ({:.2}s)",
            if result.pass { "PASS" } else { "FAIL" },
            result.detail,
            t.elapsed().as_secs_f64()
        );
    }
    println!(
        "acceptance: {}/{} criteria passed in {:.2}s",
        criteria.len() - failures,
        criteria.len(),
        started.elapsed().as_secs_f64()
    );
    if failures == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
