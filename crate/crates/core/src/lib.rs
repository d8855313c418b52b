//! Equilibria of a single-broker privacy-trading market with linear
//! supply-function bids.
//!
//! Data holders sell units of privacy compromise to one broker. Holder `i`
//! bids a slope `b_i`, offering `q_i = b_i p` at benefit `p`; the broker
//! clears the market at `p = d / sum(b)`. The crate computes
//!
//! * the competitive equilibrium (price-taking holders) and the oligopolistic
//!   Nash equilibrium (price-anticipating holders) by waterfilling
//!   ([`equilibrium`]),
//! * the distributed bidding loops that converge to them ([`dynamics`]),
//! * the efficiency loss between the two and its bounds ([`efficiency`]).

pub mod cli;
pub mod cost;
pub mod dynamics;
pub mod efficiency;
pub mod equilibrium;
pub mod error;
pub mod exec;
pub mod numeric;

pub use cost::{ConvexCost, MarketScenario, QuadraticCost};
pub use dynamics::{
    recommend_step_size, run_competitive_bidding, run_oligopoly_bidding, IterationRecord,
    Tolerance, Trajectory,
};
pub use efficiency::{
    efficiency_report, poa_sweep, worst_case_scenario, EfficiencyReport, SweepRow,
};
pub use equilibrium::{
    best_response, individual_rationality, market_clearing_price, solve_one, solve_pce, verify_kkt,
    EquilibriumKind, EquilibriumResult,
};
pub use error::{MarketError, Result};
pub use exec::Execution;
