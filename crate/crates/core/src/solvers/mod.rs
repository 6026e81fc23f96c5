//! Numerical optimization of the capacity expressions, each with a
//! brute-force lattice oracle for cross-checking.
//!
//! Auxiliary letters are identified with Shannon strategies, so every solver
//! works on the strategy-expanded channel. Single-user values are exact;
//! broadcast, relay and multiple-access values are achievable lower bounds
//! under that parametrization (the outer MAC region is additionally a sampled
//! approximation from below).

mod bc;
mod blahut;
mod mac;
mod oracle;
mod region;
mod relay;
mod simplex;

use thiserror::Error;

use crate::channels::{BcWitness, ChannelError, RelayWitness};
use crate::probcore::ProbError;

pub use bc::{bc_region, BcConfig, BcPoint, BcRegion};
pub use blahut::{blahut_arimoto, single_user_capacity, SingleUserReport};
pub use mac::{mac_inner_region, mac_outer_region, MacConfig, MacPoint, MacRegion, MacTerms};
pub use oracle::{grid_oracle_maximize, lattice_size, OracleResult, DEFAULT_ORACLE_BUDGET};
pub use region::{RatePoint, RateRegion};
pub use relay::{relay_capacity, relay_terms, BindingTerm, RelayConfig, RelayReport, RelayTerms};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SolverError {
    #[error(transparent)]
    Channel(#[from] ChannelError),
    #[error(transparent)]
    Prob(#[from] ProbError),
    #[error("broadcast channel is not physically degraded (x={}, s={}, y1={}, residual {:.3e})", .0.x, .0.s, .0.y1, .0.residual)]
    BcNotDegraded(BcWitness),
    #[error("relay channel is not physically degraded (x={}, x1={}, s={}, y1={}, residual {:.3e})", .0.x, .0.x1, .0.s, .0.y1, .0.residual)]
    RelayNotDegraded(RelayWitness),
    #[error("oracle lattice has {needed} points, budget is {budget}")]
    OracleBudget { needed: u128, budget: u128 },
    #[error("invalid solver configuration: {0}")]
    InvalidConfig(String),
}

pub type Result<T> = std::result::Result<T, SolverError>;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SolveStatus {
    Converged,
    /// Iteration budget ran out before the convergence test closed.
    IterationLimit,
    /// Best of a finite set of restarts; no optimality certificate.
    RestartLimit,
    /// Value is a bound obtained from sampling.
    BoundOnly,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BoundLabel {
    Exact,
    AchievableLowerBound,
    SampledOuterBound,
}

impl BoundLabel {
    pub fn as_str(&self) -> &'static str {
        match self {
            BoundLabel::Exact => "exact",
            BoundLabel::AchievableLowerBound => "achievable lower bound",
            BoundLabel::SampledOuterBound => "sampled outer bound",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolveReport {
    pub value: f64,
    /// Certified upper bound, when the method provides one.
    pub upper_bound: Option<f64>,
    /// Optimizing distributions, in solver-specific order.
    pub argmax: Vec<Vec<f64>>,
    pub iterations: usize,
    pub restarts: usize,
    pub oracle_gap: Option<f64>,
    pub status: SolveStatus,
    pub label: BoundLabel,
}

/// Lexicographic comparison used to break exact ties between candidates.
pub(crate) fn lex_less(a: &[Vec<f64>], b: &[Vec<f64>]) -> bool {
    for (x, y) in a.iter().flatten().zip(b.iter().flatten()) {
        if x < y {
            return true;
        }
        if x > y {
            return false;
        }
    }
    false
}

/// True when `(value, params)` should replace the incumbent.
pub(crate) fn improves(
    value: f64,
    params: &[Vec<f64>],
    best_value: f64,
    best_params: &[Vec<f64>],
) -> bool {
    value > best_value || (value == best_value && lex_less(params, best_params))
}
