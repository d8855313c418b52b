//! Exact competitive (price-taking) and oligopolistic (price-anticipating)
//! equilibria, plus the checks that certify them.
//!
//! Both equilibria have a waterfilling structure: each holder supplies the
//! clipped inverse of its (competitive or strategic) marginal at one common
//! benefit `p`, and `p` is the unique value at which total supply meets the
//! demand. Aggregate supply is continuous and nondecreasing in `p`, so the
//! solvers bisect on the benefit.

use std::fmt;

use crate::cost::{ConvexCost, MarketScenario};
use crate::error::{MarketError, Result};
use crate::numeric::{bisect_increasing, golden_section_max};

/// Relative width at which the benefit bisection stops.
pub const PRICE_REL_TOL: f64 = 1e-12;

/// Residual threshold (relative to `max(1, p)`) for [`verify_kkt`].
pub const KKT_TOL: f64 = 1e-8;

/// Absolute bracket width at which the golden-section best response stops.
pub const BEST_RESPONSE_TOL: f64 = 1e-10;

const MAX_BRACKET_DOUBLINGS: usize = 2_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum EquilibriumKind {
    /// Perfectly competitive equilibrium: holders take the benefit as given.
    Competitive,
    /// Oligopolistic Nash equilibrium: holders anticipate the clearing rule.
    Oligopolistic,
}

impl fmt::Display for EquilibriumKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            EquilibriumKind::Competitive => "PCE",
            EquilibriumKind::Oligopolistic => "ONE",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EquilibriumResult {
    pub kind: EquilibriumKind,
    /// Market-clearing benefit per unit of compromise.
    pub benefit: f64,
    /// Compromise amounts, in the scenario's holder order.
    pub allocations: Vec<f64>,
    /// Supply-function bids, `allocations[i] / benefit`.
    pub bids: Vec<f64>,
    /// Indices of holders with a positive allocation, ascending.
    pub participants: Vec<usize>,
    pub total_cost: f64,
}

impl EquilibriumResult {
    /// Assembles a result from a benefit and an allocation vector.
    pub fn from_allocations<C: ConvexCost>(
        kind: EquilibriumKind,
        scenario: &MarketScenario<C>,
        benefit: f64,
        allocations: Vec<f64>,
    ) -> Self {
        let bids = allocations.iter().map(|q| q / benefit).collect();
        let participants = allocations
            .iter()
            .enumerate()
            .filter(|(_, &q)| q > 0.0)
            .map(|(i, _)| i)
            .collect();
        let total_cost = scenario.total_cost(&allocations);
        EquilibriumResult {
            kind,
            benefit,
            allocations,
            bids,
            participants,
            total_cost,
        }
    }

    pub fn total_supply(&self) -> f64 {
        self.allocations.iter().sum()
    }

    pub fn max_allocation(&self) -> f64 {
        self.allocations.iter().copied().fold(0.0, f64::max)
    }
}

/// Clearing benefit `d / sum(b)` for a bid profile.
pub fn market_clearing_price(bids: &[f64], demand: f64) -> Result<f64> {
    if !(demand > 0.0 && demand.is_finite()) {
        return Err(MarketError::domain("demand", "finite and > 0", demand));
    }
    if let Some(&b) = bids.iter().find(|b| !(**b >= 0.0 && b.is_finite())) {
        return Err(MarketError::domain("bid", "finite and >= 0", b));
    }
    let total: f64 = bids.iter().sum();
    if total == 0.0 {
        return Err(MarketError::RejectedBid);
    }
    Ok(demand / total)
}

/// Amount a holder supplies at benefit `p` under the given behaviour.
pub fn holder_supply<C: ConvexCost>(kind: EquilibriumKind, cost: &C, p: f64, demand: f64) -> f64 {
    match kind {
        EquilibriumKind::Competitive => cost.inverse_marginal(p),
        EquilibriumKind::Oligopolistic => cost.inverse_d_marginal(p, demand),
    }
}

/// Total supply at benefit `p`.
pub fn aggregate_supply<C: ConvexCost>(
    kind: EquilibriumKind,
    scenario: &MarketScenario<C>,
    p: f64,
) -> f64 {
    scenario
        .holders()
        .iter()
        .map(|c| holder_supply(kind, c, p, scenario.demand()))
        .sum()
}

fn require_oligopoly<C: ConvexCost>(scenario: &MarketScenario<C>) -> Result<()> {
    if scenario.len() < 3 {
        Err(MarketError::NoEquilibrium {
            holders: scenario.len(),
        })
    } else {
        Ok(())
    }
}

/// Perfectly competitive equilibrium: the unique `p` with
/// `sum_i (C'_i)^{-1}(p) = d`.
pub fn solve_pce<C: ConvexCost>(scenario: &MarketScenario<C>) -> Result<EquilibriumResult> {
    let lo = scenario.min_base_marginal();
    // At max_i C'_i(d) the costliest-at-d holder alone supplies d; rounding
    // can leave the sum a hair short, which the growth step absorbs.
    let hi = scenario.marginal_max(scenario.demand());
    let kind = EquilibriumKind::Competitive;
    let hi = grow_upper_bracket(kind, scenario, lo, hi)?;
    solve_bracketed(kind, scenario, lo, hi)
}

/// Oligopolistic Nash equilibrium: the unique `p` with
/// `sum_i (D'_i)^{-1}(p) = d`. Requires at least three holders.
pub fn solve_one<C: ConvexCost>(scenario: &MarketScenario<C>) -> Result<EquilibriumResult> {
    require_oligopoly(scenario)?;
    let lo = scenario.min_base_marginal();
    let hi = scenario
        .marginal_max(scenario.demand() / scenario.len() as f64)
        .max(2.0 * lo);
    let kind = EquilibriumKind::Oligopolistic;
    let hi = grow_upper_bracket(kind, scenario, lo, hi)?;
    solve_bracketed(kind, scenario, lo, hi)
}

/// Doubles `hi` until aggregate supply at `hi` covers the demand.
fn grow_upper_bracket<C: ConvexCost>(
    kind: EquilibriumKind,
    scenario: &MarketScenario<C>,
    lo: f64,
    mut hi: f64,
) -> Result<f64> {
    for _ in 0..MAX_BRACKET_DOUBLINGS {
        if aggregate_supply(kind, scenario, hi) >= scenario.demand() {
            return Ok(hi);
        }
        hi = if hi > 0.0 { 2.0 * hi } else { 1.0 };
    }
    Err(MarketError::InvalidBracket { lo, hi })
}

/// Solves for the clearing benefit inside a caller-chosen bracket.
///
/// The bracket must satisfy `supply(lo) < d <= supply(hi)`.
pub fn solve_bracketed<C: ConvexCost>(
    kind: EquilibriumKind,
    scenario: &MarketScenario<C>,
    lo: f64,
    hi: f64,
) -> Result<EquilibriumResult> {
    if kind == EquilibriumKind::Oligopolistic {
        require_oligopoly(scenario)?;
    }
    let d = scenario.demand();
    let supply = |p: f64| aggregate_supply(kind, scenario, p);
    if !(lo >= 0.0 && hi > lo && supply(lo) < d && supply(hi) >= d) {
        return Err(MarketError::InvalidBracket { lo, hi });
    }
    let bracket = bisect_increasing(supply, d, lo, hi, |lo, hi| {
        hi - lo <= PRICE_REL_TOL * hi.max(1.0)
    });
    // Supply is smooth (piecewise linear for quadratics) inside the final
    // bracket, so the chord crossing removes the residual bisection error.
    let p = bracket.interpolate(d);
    let allocations = scenario
        .holders()
        .iter()
        .map(|c| holder_supply(kind, c, p, d))
        .collect();
    Ok(EquilibriumResult::from_allocations(
        kind,
        scenario,
        p,
        allocations,
    ))
}

#[derive(Debug, Clone, PartialEq)]
pub struct KktReport {
    pub kind: EquilibriumKind,
    /// Per holder: `marginal(q_i) - p` for participants, `max(0, p - marginal(0))`
    /// for the rest. The marginal is `D'` for oligopolistic results.
    pub residuals: Vec<f64>,
    pub max_participant_residual: f64,
    pub max_nonparticipant_residual: f64,
    pub threshold: f64,
    pub pass: bool,
}

/// Checks the first-order optimality conditions characterizing `result`.
pub fn verify_kkt<C: ConvexCost>(
    result: &EquilibriumResult,
    scenario: &MarketScenario<C>,
) -> Result<KktReport> {
    check_shape(result, scenario)?;
    let d = scenario.demand();
    let p = result.benefit;
    let mut residuals = Vec::with_capacity(scenario.len());
    let mut max_participant: f64 = 0.0;
    let mut max_nonparticipant: f64 = 0.0;
    for (cost, &q) in scenario.holders().iter().zip(&result.allocations) {
        let marginal_at = |x: f64| match result.kind {
            EquilibriumKind::Competitive => cost.marginal(x),
            EquilibriumKind::Oligopolistic => cost.d_marginal(x, d),
        };
        if q > 0.0 {
            let r = marginal_at(q)? - p;
            max_participant = max_participant.max(r.abs());
            residuals.push(r);
        } else {
            let r = (p - marginal_at(0.0)?).max(0.0);
            max_nonparticipant = max_nonparticipant.max(r);
            residuals.push(r);
        }
    }
    let threshold = KKT_TOL * p.max(1.0);
    Ok(KktReport {
        kind: result.kind,
        residuals,
        max_participant_residual: max_participant,
        max_nonparticipant_residual: max_nonparticipant,
        threshold,
        pass: max_participant <= threshold && max_nonparticipant <= threshold,
    })
}

fn check_shape<C: ConvexCost>(
    result: &EquilibriumResult,
    scenario: &MarketScenario<C>,
) -> Result<()> {
    if result.allocations.len() != scenario.len() {
        return Err(MarketError::ScenarioMismatch(format!(
            "result has {} allocations, scenario has {} holders",
            result.allocations.len(),
            scenario.len()
        )));
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BestResponse {
    pub bid: f64,
    pub payoff: f64,
}

/// Payoff `p(b) q_i - C_i(q_i)` of holder `holder` bidding `bid` against a
/// total opposing bid `others_total`.
pub fn payoff<C: ConvexCost>(cost: &C, bid: f64, others_total: f64, demand: f64) -> f64 {
    let total = others_total + bid;
    let q = demand * bid / total;
    demand * demand * bid / (total * total) - cost.cost_unchecked(q)
}

/// Sign-carrying factor of the payoff derivative in the holder's own bid:
/// `(B - b)/(B + b) - (B/d) C'(d b / (B + b))`, strictly decreasing in `b`.
fn payoff_slope<C: ConvexCost>(cost: &C, bid: f64, others_total: f64, demand: f64) -> f64 {
    let total = others_total + bid;
    (others_total - bid) / total
        - others_total / demand * cost.marginal_unchecked(demand * bid / total)
}

/// Optimal bid of `holder` against the bids `others` of every other holder
/// (in scenario order, with `holder` omitted).
///
/// The payoff is unimodal on `[0, sum(others)]` and its maximizer lies inside
/// that interval. A golden-section search localizes it and bisection on the
/// first-order condition polishes the bid.
pub fn best_response<C: ConvexCost>(
    scenario: &MarketScenario<C>,
    holder: usize,
    others: &[f64],
) -> Result<BestResponse> {
    let n = scenario.len();
    if holder >= n {
        return Err(MarketError::Precondition(format!(
            "holder index {holder} out of range for {n} holders"
        )));
    }
    if others.len() + 1 != n {
        return Err(MarketError::Precondition(format!(
            "expected {} opposing bids, got {}",
            n - 1,
            others.len()
        )));
    }
    if let Some(&b) = others.iter().find(|b| !(**b >= 0.0 && b.is_finite())) {
        return Err(MarketError::domain("bid", "finite and >= 0", b));
    }
    let others_total: f64 = others.iter().sum();
    if others_total <= 0.0 {
        return Err(MarketError::Precondition(
            "opposing bids sum to zero; the payoff has no maximizer".to_string(),
        ));
    }
    let cost = &scenario.holders()[holder];
    let d = scenario.demand();
    let u = |b: f64| payoff(cost, b, others_total, d);
    let slope = |b: f64| payoff_slope(cost, b, others_total, d);

    if slope(0.0) <= 0.0 {
        return Ok(BestResponse {
            bid: 0.0,
            payoff: 0.0,
        });
    }

    let (glo, ghi) = golden_section_max(u, 0.0, others_total, BEST_RESPONSE_TOL);
    let mut width = (ghi - glo).max(BEST_RESPONSE_TOL);
    let (mut lo, mut hi) = (glo, ghi);
    loop {
        lo = (lo - width).max(0.0);
        hi = (hi + width).min(others_total);
        if (lo == 0.0 || slope(lo) > 0.0) && (hi == others_total || slope(hi) <= 0.0) {
            break;
        }
        width *= 2.0;
    }
    let polished = bisect_increasing(|b| -slope(b), 0.0, lo, hi, |_, _| false).midpoint();
    let golden = 0.5 * (glo + ghi);
    let bid = if u(polished) >= u(golden) {
        polished
    } else {
        golden
    };
    Ok(BestResponse {
        bid,
        payoff: u(bid),
    })
}

/// Net revenue `p q_i - C_i(q_i)` of every holder at `result`.
pub fn individual_rationality<C: ConvexCost>(
    result: &EquilibriumResult,
    scenario: &MarketScenario<C>,
) -> Result<Vec<f64>> {
    check_shape(result, scenario)?;
    Ok(scenario
        .holders()
        .iter()
        .zip(&result.allocations)
        .map(|(c, &q)| result.benefit * q - c.cost_unchecked(q))
        .collect())
}
