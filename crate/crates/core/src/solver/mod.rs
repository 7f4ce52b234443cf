//! Optimal interim allocations, payoff functionals and Border feasibility.

mod allocation;
mod weighted;

pub use allocation::{InterimAllocation, Segment, SegmentKind};
pub use weighted::{solve_weighted, solve_weighted_on, DualSample, Status, WeightedSolution};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::calculus::{iron, Grid, IroningResult, QuantileSurplus};
use crate::env::Environment;

/// Slack allowed on the majorization inequalities.
pub const BORDER_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Which {
    Buyer,
    Social,
    Weighted(f64),
}

impl Which {
    pub fn gamma(self) -> f64 {
        match self {
            Which::Buyer => 1.0,
            Which::Social => 0.0,
            Which::Weighted(g) => g,
        }
    }
}

/// `S = sup{gbar >= 0}`.
pub fn exclusion_cutoff(ir: &IroningResult) -> f64 {
    ir.cutoff(false)
}

/// Buyer-optimal allocation (`gamma = 1`, no participation constraint).
pub fn buyer_optimal_allocation(env: &Environment) -> InterimAllocation {
    buyer_optimal_on(env, Grid::default())
}

pub fn buyer_optimal_on(env: &Environment, grid: Grid) -> InterimAllocation {
    let ir = iron(env, 1.0, 0.0, grid);
    InterimAllocation::from_ironing(&ir, exclusion_cutoff(&ir))
}

/// `n int_0^1 h_gamma(F^{-1}(s)) P(s) ds`.
pub fn payoff(env: &Environment, allocation: &InterimAllocation, which: Which) -> f64 {
    let surplus = QuantileSurplus::new(env, which.gamma(), 0.0);
    env.n() as f64 * allocation.integrate_against(|s| surplus.at(s))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BorderReport {
    pub pass: bool,
    /// `min_x (int_0^x P* - int_0^x P)`; negative means a violation.
    pub worst_margin: f64,
    pub worst_s: f64,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum BorderError {
    #[error("allocation is not monotone: increases by {rise:.3e} at s = {s}")]
    NotMonotone { s: f64, rise: f64 },
}

fn competitive_integral(x: f64, n: usize) -> f64 {
    (1.0 - (1.0 - x).powi(n as i32)) / n as f64
}

/// Weak majorization of `allocation` by `(1 - s)^(n-1)`, checked at the grid
/// nodes and at every segment endpoint.
pub fn check_border(allocation: &InterimAllocation, n: usize) -> Result<BorderReport, BorderError> {
    if !allocation.is_decreasing(1e-12) {
        let s = first_rise(allocation);
        return Err(BorderError::NotMonotone {
            s,
            rise: allocation.value(s) - allocation.value((s - 1e-9).max(0.0)),
        });
    }
    let grid = Grid::default();
    let mut points: Vec<f64> = grid.nodes().collect();
    for g in &allocation.segments {
        points.push(g.lo);
        points.push(g.hi);
    }
    points.push(allocation.cutoff);
    Ok(worst(points.into_iter().map(|x| {
        (x, competitive_integral(x, n) - allocation.integral(x))
    })))
}

fn first_rise(allocation: &InterimAllocation) -> f64 {
    let mut last = f64::INFINITY;
    for g in &allocation.segments {
        let start = g
            .flat_value()
            .unwrap_or_else(|| allocation.competitive_value(g.lo));
        if start > last + 1e-12 {
            return g.lo;
        }
        last = g
            .flat_value()
            .unwrap_or_else(|| allocation.competitive_value(g.hi));
    }
    0.0
}

/// Border check for an allocation known only at the nodes of a uniform grid.
///
/// For a decreasing `P` the right-endpoint sum bounds `int_0^x P` from below,
/// so a reported failure is a certain violation.
pub fn check_border_samples(values: &[f64], n: usize) -> Result<BorderReport, BorderError> {
    let cells = values.len() - 1;
    let h = 1.0 / cells as f64;
    for (k, w) in values.windows(2).enumerate() {
        if w[1] > w[0] + 1e-12 {
            return Err(BorderError::NotMonotone {
                s: (k + 1) as f64 * h,
                rise: w[1] - w[0],
            });
        }
    }
    let mut lower = 0.0;
    let mut rows = Vec::with_capacity(cells + 1);
    rows.push((0.0, 0.0));
    for (k, &v) in values.iter().enumerate().skip(1) {
        lower += v * h;
        let x = k as f64 * h;
        rows.push((x, competitive_integral(x, n) - lower));
    }
    Ok(worst(rows.into_iter()))
}

fn worst(rows: impl Iterator<Item = (f64, f64)>) -> BorderReport {
    let (worst_s, worst_margin) = rows.fold((0.0, f64::INFINITY), |acc, r| {
        if r.1 < acc.1 {
            r
        } else {
            acc
        }
    });
    BorderReport {
        pass: worst_margin >= -BORDER_TOL,
        worst_margin,
        worst_s,
    }
}
