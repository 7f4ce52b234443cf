//! Optimal procurement under unobservable quality.
//!
//! The pipeline runs environment -> ironing -> interim allocation ->
//! bid-restricted auction, with Monte Carlo simulation, exact interim formulas,
//! a linear-programming oracle and a weak-dominance checker to cross-check
//! every stage.

pub mod auction;
pub mod calculus;
pub mod env;
pub mod exec;
pub mod mechanism;
pub mod quadrature;
pub mod rng;
pub mod solver;
pub mod verify;
