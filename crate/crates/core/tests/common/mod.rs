//! Shared fixtures and independent oracles for the integration tests.
#![allow(dead_code)]

use privmarket::{MarketScenario, QuadraticCost};
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

pub const SUITE_SEED: u64 = 0x5eed_2024;
pub const SUITE_SIZE: usize = 100;

pub fn three_holder() -> MarketScenario {
    MarketScenario::quadratic(2.0, &[(0.1, 0.002), (0.2, 0.005), (0.1, 0.005)]).unwrap()
}

/// `n in 3..=8`, `a in [0, 1]`, `h in [0.001, 1]`, `d in [0.5, 10]`.
pub fn random_scenario(rng: &mut StdRng) -> MarketScenario {
    let n = rng.gen_range(3..=8);
    let d = rng.gen_range(0.5..=10.0);
    let holders = (0..n)
        .map(|_| QuadraticCost::new(rng.gen_range(0.0..=1.0), rng.gen_range(0.001..=1.0)).unwrap())
        .collect();
    MarketScenario::new(d, holders).unwrap()
}

pub fn random_suite(seed: u64, count: usize) -> Vec<MarketScenario> {
    let mut rng = StdRng::seed_from_u64(seed);
    (0..count).map(|_| random_scenario(&mut rng)).collect()
}

/// Euclidean projection onto `{x >= 0, sum x = total}` by sorting.
pub fn project_simplex(y: &[f64], total: f64) -> Vec<f64> {
    let mut u = y.to_vec();
    u.sort_by(|a, b| b.total_cmp(a));
    let mut cumulative = 0.0;
    let mut theta = 0.0;
    for (j, &uj) in u.iter().enumerate() {
        cumulative += uj;
        let candidate = (cumulative - total) / (j + 1) as f64;
        if uj - candidate > 0.0 {
            theta = candidate;
        }
    }
    y.iter().map(|&v| (v - theta).max(0.0)).collect()
}

/// Projected gradient descent on `sum_i a_i q_i + h_i q_i^2` over the simplex
/// `sum q = d, q >= 0`. Knows nothing about prices or waterfilling.
pub fn projected_gradient_pce(s: &MarketScenario) -> Vec<f64> {
    let holders = s.holders();
    let d = s.demand();
    let lipschitz = holders.iter().map(|c| 2.0 * c.h()).fold(0.0, f64::max);
    let step = 1.0 / lipschitz;
    let mut q = vec![d / holders.len() as f64; holders.len()];
    for _ in 0..2_000_000 {
        let y: Vec<f64> = q
            .iter()
            .zip(holders)
            .map(|(&qi, c)| qi - step * (c.a() + 2.0 * c.h() * qi))
            .collect();
        let next = project_simplex(&y, d);
        let change = next
            .iter()
            .zip(&q)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        q = next;
        if change <= 1e-15 * d {
            break;
        }
    }
    q
}

pub fn without(v: &[f64], i: usize) -> Vec<f64> {
    v.iter()
        .enumerate()
        .filter(|(j, _)| *j != i)
        .map(|(_, &b)| b)
        .collect()
}

pub fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y).abs())
        .fold(0.0, f64::max)
}
