use thiserror::Error;

use crate::equilibrium::EquilibriumKind;

pub type Result<T, E = MarketError> = std::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum MarketError {
    /// An argument fell outside the domain of the operation.
    #[error("{what} must be {requirement}, got {value}")]
    Domain {
        what: &'static str,
        requirement: &'static str,
        value: f64,
    },

    /// Strategic disutility evaluated at or beyond half of the demand.
    #[error("compromise amount {q} is at or beyond the singularity d/2 = {half}")]
    Singularity { q: f64, half: f64 },

    /// All bids were zero, so no clearing benefit exists.
    #[error("bid rejected: the sum of supply-function bids is zero")]
    RejectedBid,

    #[error("{}", no_equilibrium_message(*.holders))]
    NoEquilibrium { holders: usize },

    #[error("invalid scenario: {0}")]
    InvalidScenario(String),

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("expected a {expected} result, got {found}")]
    KindMismatch {
        expected: EquilibriumKind,
        found: EquilibriumKind,
    },

    #[error("result does not belong to this scenario: {0}")]
    ScenarioMismatch(String),

    #[error("price bracket [{lo}, {hi}] does not contain the clearing benefit")]
    InvalidBracket { lo: f64, hi: f64 },

    /// The bidding loop left its stable regime.
    #[error("bidding dynamics diverged at iteration {iteration} (supply gap {gap})")]
    Diverged { iteration: usize, gap: f64 },
}

fn no_equilibrium_message(holders: usize) -> String {
    match holders {
        2 => "no oligopolistic Nash equilibrium exists for two holders".to_string(),
        n => format!(
            "no oligopolistic Nash equilibrium exists for {n} holder(s); at least three are required"
        ),
    }
}

impl MarketError {
    pub(crate) fn domain(what: &'static str, requirement: &'static str, value: f64) -> Self {
        MarketError::Domain {
            what,
            requirement,
            value,
        }
    }
}
