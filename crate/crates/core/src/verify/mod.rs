//! Independent oracles: a bin-level linear program over the feasible
//! allocations, and an exhaustive weak-dominance checker.

mod dominance;
mod lp;

pub use dominance::{
    bid_grid, check_mechanism, dominance_check, expected_payoff, quality_grid, DominanceReport, Violation,
    EDGE_EPS, GAIN_TOL,
};
pub use lp::{lp_oracle, DiscreteProgram, OracleReport, OracleSolution};

use thiserror::Error;

use crate::auction::interim_probability;
use crate::calculus::Grid;
use crate::env::Environment;
use crate::mechanism::Mechanism;
use crate::solver::InterimAllocation;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum VerifyError {
    #[error("linear program failed: {0}")]
    Lp(String),
}

/// Largest node-wise gap between `allocation` and the interim allocation that
/// dominant-strategy play induces under `mech`.
pub fn round_trip_error(env: &Environment, allocation: &InterimAllocation, mech: &Mechanism, grid: Grid) -> f64 {
    grid.nodes()
        .map(|s| {
            let q = env.dist().quantile(s);
            (allocation.value(s) - interim_probability(mech, env, q)).abs()
        })
        .fold(0.0, f64::max)
}
