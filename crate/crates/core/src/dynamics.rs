//! Distributed supply-function bidding between the holders and the broker.
//!
//! Each round the broker announces a benefit `p(k)`; every holder answers with
//! the bid `b_i(k) = [q_i(p(k)) / p(k)]+`, where `q_i` is its clipped inverse
//! marginal (competitive) or inverse strategic marginal (oligopolistic). The
//! broker then moves the benefit against the excess supply:
//!
//! ```text
//! p(k+1) = [p(k) - step * (sum_i b_i(k) p(k) - d)]+
//! ```

use std::io::{self, Write};

use crate::cost::{ConvexCost, MarketScenario};
use crate::equilibrium::{holder_supply, EquilibriumKind, EquilibriumResult};
use crate::error::{MarketError, Result};
use crate::numeric::fmt12;

pub const DEFAULT_TOL_ABS: f64 = 1e-8;
pub const DEFAULT_TOL_REL: f64 = 1e-8;
pub const DEFAULT_MAX_ITERS: usize = 100_000;

/// Supply gap (relative to demand) beyond which a run counts as diverged.
pub const DIVERGENCE_GAP_FACTOR: f64 = 1e6;

/// Number of zero-projected benefits after which a run counts as diverged.
pub const MAX_ZERO_PROJECTIONS: usize = 2;

/// Stopping tolerances: a run stops once `|gap| <= abs + rel * d` and the
/// benefit moved by at most `abs * max(1, p)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tolerance {
    pub abs: f64,
    pub rel: f64,
}

impl Default for Tolerance {
    fn default() -> Self {
        Tolerance {
            abs: DEFAULT_TOL_ABS,
            rel: DEFAULT_TOL_REL,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct IterationRecord {
    pub k: usize,
    /// Benefit announced this round.
    pub benefit: f64,
    pub bids: Vec<f64>,
    /// `sum_i b_i p - d`.
    pub supply_gap: f64,
    /// `|p(k+1) - p(k)|`.
    pub price_step: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub kind: EquilibriumKind,
    pub records: Vec<IterationRecord>,
    pub converged: bool,
    /// Benefit, bids and allocations of the last round.
    pub final_state: EquilibriumResult,
}

impl Trajectory {
    pub fn iterations(&self) -> usize {
        self.records.len()
    }

    pub fn last(&self) -> &IterationRecord {
        self.records
            .last()
            .expect("trajectory has at least one record")
    }

    /// Writes `k, p, b_1..b_n, supply_gap, price_step` rows.
    pub fn write_csv<W: Write>(&self, mut out: W) -> io::Result<()> {
        let n = self.final_state.bids.len();
        let mut header = vec!["k".to_string(), "p".to_string()];
        header.extend((1..=n).map(|i| format!("b_{i}")));
        header.push("supply_gap".to_string());
        header.push("price_step".to_string());
        writeln!(out, "{}", header.join(","))?;
        for r in &self.records {
            let mut row = vec![r.k.to_string(), fmt12(r.benefit)];
            row.extend(r.bids.iter().map(|&b| fmt12(b)));
            row.push(fmt12(r.supply_gap));
            row.push(fmt12(r.price_step));
            writeln!(out, "{}", row.join(","))?;
        }
        Ok(())
    }
}

/// Holder-scale starting benefit `max_i C'_i(d/n)`.
pub fn default_initial_benefit<C: ConvexCost>(scenario: &MarketScenario<C>) -> f64 {
    scenario.marginal_max(scenario.demand() / scenario.len() as f64)
}

/// Step size `1 / (2 sum_i b_i)` with bids evaluated at the default starting
/// benefit. Empirically contracting on quadratic costs.
pub fn recommend_step_size<C: ConvexCost>(scenario: &MarketScenario<C>) -> f64 {
    let p = default_initial_benefit(scenario);
    let total_bid: f64 = scenario
        .holders()
        .iter()
        .map(|c| c.inverse_marginal(p) / p)
        .sum();
    1.0 / (2.0 * total_bid)
}

/// Price-taking bidding loop; its fixed point is the competitive equilibrium.
pub fn run_competitive_bidding<C: ConvexCost>(
    scenario: &MarketScenario<C>,
    p0: f64,
    step_size: f64,
    max_iters: usize,
    tol: Tolerance,
) -> Result<Trajectory> {
    run_bidding(
        EquilibriumKind::Competitive,
        scenario,
        p0,
        step_size,
        max_iters,
        tol,
    )
}

/// Price-anticipating bidding loop; its fixed point is the oligopolistic
/// equilibrium. Requires at least three holders.
pub fn run_oligopoly_bidding<C: ConvexCost>(
    scenario: &MarketScenario<C>,
    p0: f64,
    step_size: f64,
    max_iters: usize,
    tol: Tolerance,
) -> Result<Trajectory> {
    run_bidding(
        EquilibriumKind::Oligopolistic,
        scenario,
        p0,
        step_size,
        max_iters,
        tol,
    )
}

pub fn run_bidding<C: ConvexCost>(
    kind: EquilibriumKind,
    scenario: &MarketScenario<C>,
    p0: f64,
    step_size: f64,
    max_iters: usize,
    tol: Tolerance,
) -> Result<Trajectory> {
    if kind == EquilibriumKind::Oligopolistic && scenario.len() < 3 {
        return Err(MarketError::NoEquilibrium {
            holders: scenario.len(),
        });
    }
    if !(p0 > 0.0 && p0.is_finite()) {
        return Err(MarketError::domain("initial benefit", "finite and > 0", p0));
    }
    if !(step_size > 0.0 && step_size.is_finite()) {
        return Err(MarketError::domain(
            "step size",
            "finite and > 0",
            step_size,
        ));
    }
    if max_iters == 0 {
        return Err(MarketError::Precondition(
            "max_iters must be at least 1".to_string(),
        ));
    }
    if !(tol.abs >= 0.0 && tol.rel >= 0.0) {
        return Err(MarketError::Precondition(
            "tolerances must be >= 0".to_string(),
        ));
    }

    let d = scenario.demand();
    let gap_tol = tol.abs + tol.rel * d;
    let mut p = p0;
    let mut records = Vec::new();
    let mut converged = false;
    let mut zero_projections = 0;

    for k in 0..max_iters {
        let bids: Vec<f64> = scenario
            .holders()
            .iter()
            .map(|c| {
                if p > 0.0 {
                    (holder_supply(kind, c, p, d) / p).max(0.0)
                } else {
                    0.0
                }
            })
            .collect();
        let supplied: f64 = bids.iter().map(|b| b * p).sum();
        let gap = supplied - d;
        let next = (p - step_size * gap).max(0.0);
        let price_step = (next - p).abs();
        records.push(IterationRecord {
            k,
            benefit: p,
            bids,
            supply_gap: gap,
            price_step,
        });

        if gap.abs() <= gap_tol && price_step <= tol.abs * p.max(1.0) {
            converged = true;
            break;
        }
        if !gap.is_finite() || gap.abs() > DIVERGENCE_GAP_FACTOR * d {
            return Err(MarketError::Diverged { iteration: k, gap });
        }
        if next == 0.0 {
            zero_projections += 1;
            if zero_projections >= MAX_ZERO_PROJECTIONS {
                return Err(MarketError::Diverged { iteration: k, gap });
            }
        }
        p = next;
    }

    let last = records.last().expect("max_iters >= 1");
    let allocations: Vec<f64> = last.bids.iter().map(|b| b * last.benefit).collect();
    let participants = allocations
        .iter()
        .enumerate()
        .filter(|(_, &q)| q > 0.0)
        .map(|(i, _)| i)
        .collect();
    let final_state = EquilibriumResult {
        kind,
        benefit: last.benefit,
        bids: last.bids.clone(),
        participants,
        total_cost: scenario.total_cost(&allocations),
        allocations,
    };
    Ok(Trajectory {
        kind,
        records,
        converged,
        final_state,
    })
}
