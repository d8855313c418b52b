//! Data-holder cost functions and the strategic disutility transform.
//!
//! A holder supplying `q` units of privacy compromise bears a private cost
//! `C(q)`. Price-anticipating holders behave as if their cost were the
//! transformed disutility `D(q)` whose marginal is
//!
//! ```text
//! D'(q) = (1 + q / (d - 2q)) * C'(q),    0 <= q < d/2
//! ```
//!
//! Every solver in the crate only touches costs through [`ConvexCost`], so a
//! new strictly convex family only has to provide its cost, marginal and
//! clipped inverse marginal.

use crate::error::{MarketError, Result};
use crate::numeric::{adaptive_simpson, bisect_increasing};

/// Relative distance from `d/2` at which the strategic transform is refused.
pub const SINGULARITY_GUARD: f64 = 1e-12;

/// Absolute tolerance of the quadrature fallback for `D(q)`.
pub const QUADRATURE_ABS_TOL: f64 = 1e-12;

/// Absolute tolerance (for `d >= 1`) of the bisection inverting `D'`.
pub const INVERSE_D_TOL: f64 = 1e-12;

/// Largest compromise amount at which `D'` and `D` may be evaluated.
pub fn singularity_cap(demand: f64) -> f64 {
    0.5 * demand * (1.0 - SINGULARITY_GUARD)
}

fn check_amount(q: f64) -> Result<()> {
    if q >= 0.0 && q.is_finite() {
        Ok(())
    } else {
        Err(MarketError::domain(
            "compromise amount",
            "finite and >= 0",
            q,
        ))
    }
}

fn check_strategic(q: f64, demand: f64) -> Result<()> {
    if !(demand > 0.0 && demand.is_finite()) {
        return Err(MarketError::domain("demand", "finite and > 0", demand));
    }
    check_amount(q)?;
    if q >= singularity_cap(demand) {
        return Err(MarketError::Singularity {
            q,
            half: 0.5 * demand,
        });
    }
    Ok(())
}

/// Factor `1 + q/(d - 2q)` turning `C'` into `D'`.
fn markup(q: f64, demand: f64) -> f64 {
    1.0 + q / (demand - 2.0 * q)
}

/// A strictly convex, increasing compromise cost with `C(0) = 0`.
pub trait ConvexCost: Clone + std::fmt::Debug + Send + Sync {
    /// `C(q)` for `q >= 0`, no domain checks.
    fn cost_unchecked(&self, q: f64) -> f64;

    /// `C'(q)` for `q >= 0`, no domain checks.
    fn marginal_unchecked(&self, q: f64) -> f64;

    /// Clipped inverse of the marginal: the amount supplied by a price taker
    /// at benefit `p`, zero at or below the participation threshold.
    fn inverse_marginal(&self, p: f64) -> f64;

    /// Base marginal cost `C'(0+)`, the participation threshold.
    fn base_marginal(&self) -> f64 {
        self.marginal_unchecked(0.0)
    }

    fn cost(&self, q: f64) -> Result<f64> {
        check_amount(q)?;
        Ok(self.cost_unchecked(q))
    }

    fn marginal(&self, q: f64) -> Result<f64> {
        check_amount(q)?;
        Ok(self.marginal_unchecked(q))
    }

    /// Strategic marginal disutility `D'(q)` on `[0, d/2)`.
    fn d_marginal(&self, q: f64, demand: f64) -> Result<f64> {
        check_strategic(q, demand)?;
        Ok(markup(q, demand) * self.marginal_unchecked(q))
    }

    /// Strategic disutility `D(q) = integral of D'` from 0 to `q`.
    ///
    /// The provided implementation integrates numerically; families with a
    /// closed-form antiderivative should override it.
    fn d_cost(&self, q: f64, demand: f64) -> Result<f64> {
        d_cost_by_quadrature(self, q, demand)
    }

    /// Amount supplied by a price-anticipating holder at benefit `p`: zero
    /// for `p <= C'(0)`, otherwise the root of `D'(q) = p` in `(0, d/2)`.
    fn inverse_d_marginal(&self, p: f64, demand: f64) -> f64 {
        if p.is_nan() || p <= self.base_marginal() {
            return 0.0;
        }
        let hi = singularity_cap(demand);
        let f = |q: f64| markup(q, demand) * self.marginal_unchecked(q);
        if f(hi) <= p {
            return hi;
        }
        let tol = INVERSE_D_TOL * demand.min(1.0);
        bisect_increasing(f, p, 0.0, hi, |lo, hi| hi - lo <= tol).midpoint()
    }
}

/// `D(q)` by adaptive Simpson integration of `D'` from 0 to `q`.
pub fn d_cost_by_quadrature<C: ConvexCost>(cost: &C, q: f64, demand: f64) -> Result<f64> {
    check_strategic(q, demand)?;
    Ok(adaptive_simpson(
        |x| markup(x, demand) * cost.marginal_unchecked(x),
        0.0,
        q,
        QUADRATURE_ABS_TOL,
    ))
}

/// `C(q) = a q + h q^2` with `a >= 0`, `h > 0`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadraticCost {
    a: f64,
    h: f64,
}

impl QuadraticCost {
    pub fn new(a: f64, h: f64) -> Result<Self> {
        if !(a >= 0.0 && a.is_finite()) {
            return Err(MarketError::domain("a", "finite and >= 0", a));
        }
        if !(h > 0.0 && h.is_finite()) {
            return Err(MarketError::domain("h", "finite and > 0", h));
        }
        Ok(QuadraticCost { a, h })
    }

    /// Base marginal cost.
    pub fn a(&self) -> f64 {
        self.a
    }

    /// Quadratic coefficient.
    pub fn h(&self) -> f64 {
        self.h
    }

    /// The same cost multiplied by `factor > 0`.
    pub fn scaled(&self, factor: f64) -> Result<Self> {
        QuadraticCost::new(self.a * factor, self.h * factor)
    }
}

impl ConvexCost for QuadraticCost {
    fn cost_unchecked(&self, q: f64) -> f64 {
        q * (self.a + self.h * q)
    }

    fn marginal_unchecked(&self, q: f64) -> f64 {
        self.a + 2.0 * self.h * q
    }

    fn inverse_marginal(&self, p: f64) -> f64 {
        ((p - self.a) / (2.0 * self.h)).max(0.0)
    }

    fn base_marginal(&self) -> f64 {
        self.a
    }

    // With (d - x)/(d - 2x) = 1/2 + (d/2)/(d - 2x) the integrand splits into
    // C'(x)/2 plus a term with a logarithmic antiderivative:
    //   D(q) = C(q)/2 + (d/4)(a + h d) ln(d / (d - 2q)) - d h q / 2.
    fn d_cost(&self, q: f64, demand: f64) -> Result<f64> {
        check_strategic(q, demand)?;
        let d = demand;
        let log_term = -(-2.0 * q / d).ln_1p();
        Ok(
            0.5 * self.cost_unchecked(q) + 0.25 * d * (self.a + self.h * d) * log_term
                - 0.5 * d * self.h * q,
        )
    }
}

/// Demand plus the ordered list of holder costs.
#[derive(Debug, Clone, PartialEq)]
pub struct MarketScenario<C = QuadraticCost> {
    demand: f64,
    holders: Vec<C>,
}

impl<C: ConvexCost> MarketScenario<C> {
    pub fn new(demand: f64, holders: Vec<C>) -> Result<Self> {
        if !(demand > 0.0 && demand.is_finite()) {
            return Err(MarketError::InvalidScenario(format!(
                "demand must be finite and > 0, got {demand}"
            )));
        }
        if holders.is_empty() {
            return Err(MarketError::InvalidScenario(
                "at least one data holder is required".to_string(),
            ));
        }
        Ok(MarketScenario { demand, holders })
    }

    pub fn demand(&self) -> f64 {
        self.demand
    }

    pub fn holders(&self) -> &[C] {
        &self.holders
    }

    pub fn len(&self) -> usize {
        self.holders.len()
    }

    pub fn is_empty(&self) -> bool {
        self.holders.is_empty()
    }

    /// Holder indices sorted by base marginal cost, ties kept in input order.
    pub fn base_order(&self) -> Vec<usize> {
        let mut order: Vec<usize> = (0..self.holders.len()).collect();
        order.sort_by(|&i, &j| {
            self.holders[i]
                .base_marginal()
                .total_cmp(&self.holders[j].base_marginal())
        });
        order
    }

    pub fn min_base_marginal(&self) -> f64 {
        self.holders
            .iter()
            .map(ConvexCost::base_marginal)
            .fold(f64::INFINITY, f64::min)
    }

    /// `max_i C'_i(q)`.
    pub fn marginal_max(&self, q: f64) -> f64 {
        self.holders
            .iter()
            .map(|c| c.marginal_unchecked(q))
            .fold(f64::NEG_INFINITY, f64::max)
    }

    /// `min_i C'_i(q)`.
    pub fn marginal_min(&self, q: f64) -> f64 {
        self.holders
            .iter()
            .map(|c| c.marginal_unchecked(q))
            .fold(f64::INFINITY, f64::min)
    }

    /// Total social cost `sum_i C_i(q_i)`.
    pub fn total_cost(&self, allocations: &[f64]) -> f64 {
        self.holders
            .iter()
            .zip(allocations)
            .map(|(c, &q)| c.cost_unchecked(q))
            .sum()
    }
}

impl MarketScenario<QuadraticCost> {
    /// Builds a scenario from `(a, h)` pairs.
    pub fn quadratic(demand: f64, coefficients: &[(f64, f64)]) -> Result<Self> {
        let holders = coefficients
            .iter()
            .map(|&(a, h)| QuadraticCost::new(a, h))
            .collect::<Result<Vec<_>>>()?;
        MarketScenario::new(demand, holders)
    }

    /// Every cost multiplied by `factor`.
    pub fn scaled(&self, factor: f64) -> Result<Self> {
        let holders = self
            .holders
            .iter()
            .map(|c| c.scaled(factor))
            .collect::<Result<Vec<_>>>()?;
        MarketScenario::new(self.demand, holders)
    }
}
