//! Efficiency loss of the oligopolistic equilibrium relative to the
//! competitive one, with its closed-form bounds.
//!
//! For `n >= 3` holders, with `M = max_i C'_i(d/n)` and `m = min_i C'_i(d/n)`:
//!
//! * every competitive participant also participates at the oligopoly;
//! * `m <= p_pce <= p_one <= (n-1)/(n-2) * M`, so
//!   `p_one / p_pce <= (n-1)/(n-2) * M/m`;
//! * `C_pce <= C_one`, and when the largest competitive allocation is below
//!   `d/2`, `C_one <= (1 + q_max/(d - 2 q_max)) * C_pce`.

use std::io::{self, Write};

use crate::cost::{ConvexCost, MarketScenario, QuadraticCost};
use crate::equilibrium::{solve_one, solve_pce, EquilibriumKind, EquilibriumResult};
use crate::error::{MarketError, Result};
use crate::exec::Execution;
use crate::numeric::fmt12;

/// Slack allowed on every bound comparison.
pub const BOUND_SLACK: f64 = 1e-9;

/// Results must clear the scenario's demand to this relative accuracy.
const DEMAND_MATCH_TOL: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundChecks {
    /// Competitive participants are a subset of oligopolistic ones.
    pub participation_superset: bool,
    /// `p_pce <= p_one`.
    pub benefit_order: bool,
    /// `p_pce >= m`.
    pub competitive_floor: bool,
    /// `p_one <= (n-1)/(n-2) * M`.
    pub oligopoly_ceiling: bool,
    /// `p_one / p_pce <= price_bound`.
    pub price_ratio_bound: bool,
    /// `C_pce <= C_one`.
    pub cost_order: bool,
    /// `C_one / C_pce <= cost_bound`; `None` when the bound does not apply.
    pub cost_ratio_bound: Option<bool>,
}

impl BoundChecks {
    pub fn all_hold(&self) -> bool {
        self.participation_superset
            && self.benefit_order
            && self.competitive_floor
            && self.oligopoly_ceiling
            && self.price_ratio_bound
            && self.cost_order
            && self.cost_ratio_bound.unwrap_or(true)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EfficiencyReport {
    /// `p_one / p_pce`.
    pub price_ratio: f64,
    /// Price of anarchy `C_one / C_pce`.
    pub cost_ratio: f64,
    /// `(n-1)/(n-2) * M/m`.
    pub price_bound: f64,
    /// `1 + q_max/(d - 2 q_max)`, present only when `q_max < d/2`.
    pub cost_bound: Option<f64>,
    pub participation_superset: bool,
    /// `max_i C'_i(d/n)`.
    pub marginal_max: f64,
    /// `min_i C'_i(d/n)`.
    pub marginal_min: f64,
    /// Largest competitive allocation.
    pub competitive_max_allocation: f64,
    pub checks: BoundChecks,
    pub bounds_hold: bool,
}

fn within(lhs: f64, rhs: f64) -> bool {
    lhs <= rhs + BOUND_SLACK * rhs.abs().max(1.0)
}

fn check_result<C: ConvexCost>(
    result: &EquilibriumResult,
    expected: EquilibriumKind,
    scenario: &MarketScenario<C>,
) -> Result<()> {
    if result.kind != expected {
        return Err(MarketError::KindMismatch {
            expected,
            found: result.kind,
        });
    }
    if result.allocations.len() != scenario.len() {
        return Err(MarketError::ScenarioMismatch(format!(
            "{} result has {} allocations, scenario has {} holders",
            result.kind,
            result.allocations.len(),
            scenario.len()
        )));
    }
    let d = scenario.demand();
    if (result.total_supply() - d).abs() > DEMAND_MATCH_TOL * d {
        return Err(MarketError::ScenarioMismatch(format!(
            "{} result supplies {} but demand is {d}",
            result.kind,
            result.total_supply()
        )));
    }
    Ok(())
}

/// Compares a competitive and an oligopolistic result of the same scenario.
pub fn efficiency_report<C: ConvexCost>(
    pce: &EquilibriumResult,
    one: &EquilibriumResult,
    scenario: &MarketScenario<C>,
) -> Result<EfficiencyReport> {
    let n = scenario.len();
    if n < 3 {
        return Err(MarketError::NoEquilibrium { holders: n });
    }
    check_result(pce, EquilibriumKind::Competitive, scenario)?;
    check_result(one, EquilibriumKind::Oligopolistic, scenario)?;

    let d = scenario.demand();
    let nf = n as f64;
    let big_m = scenario.marginal_max(d / nf);
    let small_m = scenario.marginal_min(d / nf);
    let oligopoly_factor = (nf - 1.0) / (nf - 2.0);

    let price_ratio = one.benefit / pce.benefit;
    let cost_ratio = one.total_cost / pce.total_cost;
    let price_bound = oligopoly_factor * big_m / small_m;
    let q_max = pce.max_allocation();
    let cost_bound = (q_max < 0.5 * d).then(|| 1.0 + q_max / (d - 2.0 * q_max));
    let participation_superset = pce
        .allocations
        .iter()
        .zip(&one.allocations)
        .all(|(&qc, &qo)| qc <= 0.0 || qo > 0.0);

    let checks = BoundChecks {
        participation_superset,
        benefit_order: within(pce.benefit, one.benefit),
        competitive_floor: within(small_m, pce.benefit),
        oligopoly_ceiling: within(one.benefit, oligopoly_factor * big_m),
        price_ratio_bound: price_ratio <= price_bound + BOUND_SLACK,
        cost_order: within(pce.total_cost, one.total_cost),
        cost_ratio_bound: cost_bound.map(|b| cost_ratio <= b + BOUND_SLACK),
    };
    Ok(EfficiencyReport {
        price_ratio,
        cost_ratio,
        price_bound,
        cost_bound,
        participation_superset,
        marginal_max: big_m,
        marginal_min: small_m,
        competitive_max_allocation: q_max,
        bounds_hold: checks.all_hold(),
        checks,
    })
}

/// Both equilibria of one scenario and their comparison.
#[derive(Debug, Clone, PartialEq)]
pub struct MarketAudit {
    pub pce: EquilibriumResult,
    pub one: EquilibriumResult,
    pub report: EfficiencyReport,
}

pub fn audit<C: ConvexCost>(scenario: &MarketScenario<C>) -> Result<MarketAudit> {
    let pce = solve_pce(scenario)?;
    let one = solve_one(scenario)?;
    let report = efficiency_report(&pce, &one, scenario)?;
    Ok(MarketAudit { pce, one, report })
}

/// Audits many independent scenarios.
pub fn audit_many<C: ConvexCost>(
    scenarios: &[MarketScenario<C>],
    exec: Execution,
) -> Vec<Result<MarketAudit>> {
    exec.map(scenarios, audit)
}

/// Three holders, one of them `r` times cheaper at the margin:
/// `C_1(q) = c q^2 / (2r)`, `C_2(q) = C_3(q) = c q^2 / 2`.
pub fn worst_case_scenario(r: f64, c: f64, d: f64) -> Result<MarketScenario> {
    for (name, v) in [("r", r), ("c", c), ("d", d)] {
        if !(v > 0.0 && v.is_finite()) {
            return Err(MarketError::InvalidScenario(format!(
                "{name} must be finite and > 0, got {v}"
            )));
        }
    }
    let cheap = QuadraticCost::new(0.0, c / (2.0 * r))?;
    let dear = QuadraticCost::new(0.0, c / 2.0)?;
    MarketScenario::new(d, vec![cheap, dear, dear])
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepRow {
    pub r: f64,
    pub p_pce: f64,
    pub p_one: f64,
    pub c_pce: f64,
    pub c_one: f64,
    pub price_ratio: f64,
    pub cost_ratio: f64,
}

/// Solves both equilibria of the worst-case family for each `r`.
pub fn poa_sweep(r_values: &[f64], c: f64, d: f64) -> Result<Vec<SweepRow>> {
    poa_sweep_with(r_values, c, d, Execution::default())
}

pub fn poa_sweep_with(r_values: &[f64], c: f64, d: f64, exec: Execution) -> Result<Vec<SweepRow>> {
    if let Some(&r) = r_values.iter().find(|r| !(**r > 0.0 && r.is_finite())) {
        return Err(MarketError::InvalidScenario(format!(
            "sweep values must be finite and > 0, got {r}"
        )));
    }
    if r_values.windows(2).any(|w| w[1] < w[0]) {
        return Err(MarketError::InvalidScenario(
            "sweep values must be sorted ascending".to_string(),
        ));
    }
    exec.map(r_values, |&r| {
        let scenario = worst_case_scenario(r, c, d)?;
        let pce = solve_pce(&scenario)?;
        let one = solve_one(&scenario)?;
        Ok(SweepRow {
            r,
            p_pce: pce.benefit,
            p_one: one.benefit,
            c_pce: pce.total_cost,
            c_one: one.total_cost,
            price_ratio: one.benefit / pce.benefit,
            cost_ratio: one.total_cost / pce.total_cost,
        })
    })
    .into_iter()
    .collect()
}

/// Writes `r, p_pce, p_one, c_pce, c_one, price_ratio, cost_ratio` rows.
pub fn write_sweep_csv<W: Write>(rows: &[SweepRow], mut out: W) -> io::Result<()> {
    writeln!(out, "r,p_pce,p_one,c_pce,c_one,price_ratio,cost_ratio")?;
    for row in rows {
        let fields = [
            row.r,
            row.p_pce,
            row.p_one,
            row.c_pce,
            row.c_one,
            row.price_ratio,
            row.cost_ratio,
        ];
        let line: Vec<String> = fields.iter().map(|&v| fmt12(v)).collect();
        writeln!(out, "{}", line.join(","))?;
    }
    Ok(())
}
