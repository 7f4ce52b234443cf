//! Bid-restricted auctions built from interim allocations, and the shape
//! classification of the virtual surplus.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::auction::exact_pooled_interim;
use crate::calculus::{Grid, QuantileSurplus};
use crate::env::Environment;
use crate::solver::{InterimAllocation, SegmentKind};

/// Noise band for sign changes in [`classify`], relative to `max |h|`.
const CLASSIFY_BAND: f64 = 1e-9;

/// What a winner pays when the runner-up valid bid is the extra bid `B`,
/// with `k` sellers bidding it.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExtraBidPayment {
    /// `(B + k top) / (k + 1)`.
    #[default]
    Unscaled,
    /// `zeta (B + k top) / (k + 1)`.
    ZetaScaled,
}

fn yes() -> bool {
    true
}

fn is_true(b: &bool) -> bool {
    *b
}

fn is_default_payment(p: &ExtraBidPayment) -> bool {
    *p == ExtraBidPayment::Unscaled
}

/// A BRA, or an augmented BRA when `extra_bid` and `zeta` are present.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Mechanism {
    pub intervals: Vec<(f64, f64)>,
    pub extra_bid: Option<f64>,
    pub zeta: Option<f64>,
    /// Reduced payment for a sole interval winner facing a gap bid.
    #[serde(default = "yes", skip_serializing_if = "is_true")]
    pub payment_reduction: bool,
    #[serde(default, skip_serializing_if = "is_default_payment")]
    pub extra_bid_payment: ExtraBidPayment,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum MechanismError {
    #[error("mechanism has no bid intervals")]
    Empty,
    #[error("bid interval {index} = [{lo}, {hi}] is malformed or outside [0, 1]")]
    BadInterval { index: usize, lo: f64, hi: f64 },
    #[error("bid intervals {index} and {next} overlap or are out of order")]
    Overlap { index: usize, next: usize },
    #[error("extra bid and qualification rate must be given together")]
    HalfAugmented,
    #[error("extra bid {extra} must exceed the top of the last interval {top} and lie in [0, 1]")]
    BadExtraBid { extra: f64, top: f64 },
    #[error("qualification rate {0} must lie in (0, 1]")]
    BadZeta(f64),
}

impl Mechanism {
    pub fn bra(intervals: Vec<(f64, f64)>) -> Self {
        Mechanism {
            intervals,
            extra_bid: None,
            zeta: None,
            payment_reduction: true,
            extra_bid_payment: ExtraBidPayment::Unscaled,
        }
    }

    /// The no-trade mechanism `{0}`.
    pub fn trivial() -> Self {
        Mechanism::bra(vec![(0.0, 0.0)])
    }

    /// Top of the last bid interval.
    pub fn top(&self) -> f64 {
        self.intervals.last().map_or(0.0, |iv| iv.1)
    }

    /// `(B, zeta)` for an augmented mechanism.
    pub fn augmentation(&self) -> Option<(f64, f64)> {
        self.extra_bid.zip(self.zeta)
    }

    /// Upper end of the gap below interval `i` (`0` for the first).
    pub fn gap_floor(&self, i: usize) -> f64 {
        if i == 0 {
            0.0
        } else {
            self.intervals[i - 1].1
        }
    }

    /// Index of the interval containing `b`.
    pub fn interval_of(&self, b: f64) -> Option<usize> {
        self.intervals.iter().position(|&(lo, hi)| lo <= b && b <= hi)
    }

    pub fn validate(&self) -> Result<(), MechanismError> {
        if self.intervals.is_empty() {
            return Err(MechanismError::Empty);
        }
        for (index, &(lo, hi)) in self.intervals.iter().enumerate() {
            let ok = lo.is_finite() && hi.is_finite() && 0.0 <= lo && lo <= hi && hi <= 1.0;
            if !ok {
                return Err(MechanismError::BadInterval { index, lo, hi });
            }
        }
        for index in 1..self.intervals.len() {
            if !(self.intervals[index - 1].1 < self.intervals[index].0) {
                return Err(MechanismError::Overlap {
                    index: index - 1,
                    next: index,
                });
            }
        }
        match (self.extra_bid, self.zeta) {
            (None, None) => Ok(()),
            (Some(extra), Some(zeta)) => {
                let top = self.top();
                if !(extra > top && extra <= 1.0) {
                    return Err(MechanismError::BadExtraBid { extra, top });
                }
                if !(zeta > 0.0 && zeta <= 1.0) {
                    return Err(MechanismError::BadZeta(zeta));
                }
                Ok(())
            }
            _ => Err(MechanismError::HalfAugmented),
        }
    }
}

/// Bid intervals for pooling intervals `pooling` (sorted, in quantile space)
/// and top quantile `top`.
pub fn bid_intervals(env: &Environment, pooling: &[(f64, f64)], top: f64) -> Vec<(f64, f64)> {
    if !(top > 0.0) {
        return vec![(0.0, 0.0)];
    }
    let q = |s: f64| env.dist().quantile(s);
    let mut out = Vec::with_capacity(pooling.len() + 1);
    match pooling.first() {
        None => return vec![(0.0, q(top))],
        Some(&(first_lo, _)) if first_lo > 0.0 => out.push((0.0, q(first_lo))),
        Some(_) => {}
    }
    for (i, &(_, hi)) in pooling.iter().enumerate() {
        let next = pooling.get(i + 1).map_or(top, |p| p.0);
        out.push((q(hi), q(next)));
    }
    out
}

/// The mechanism implementing `allocation`: bid intervals from its pooled
/// segments, and an extra bid with qualification rate from its tail.
pub fn build_mechanism(env: &Environment, allocation: &InterimAllocation) -> Mechanism {
    let mut pooling = Vec::new();
    let mut tail = None;
    for g in &allocation.segments {
        match g.kind {
            SegmentKind::Pooled { .. } => pooling.push((g.lo, g.hi)),
            SegmentKind::Tail { value } => tail = Some((g.lo, g.hi, value)),
            SegmentKind::Competitive => {}
        }
    }
    let top = tail.map_or(allocation.cutoff, |t| t.0);
    let mut mech = Mechanism::bra(bid_intervals(env, &pooling, top));
    if let Some((lo, hi, value)) = tail {
        let mean = exact_pooled_interim(lo, hi, allocation.n);
        mech.extra_bid = Some(env.dist().quantile(hi));
        mech.zeta = Some((value / mean).min(1.0));
    }
    mech
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Classification {
    Decreasing,
    Increasing,
    SinglePeaked,
    SingleDipped,
    General,
}

/// Shape of `h_gamma` over quality, from sign changes of its finite
/// differences on the quantile grid.
pub fn classify(env: &Environment) -> Classification {
    classify_on(env, Grid::default())
}

pub fn classify_on(env: &Environment, grid: Grid) -> Classification {
    let h = QuantileSurplus::new(env, env.gamma(), 0.0);
    let values: Vec<f64> = grid.nodes().map(|s| h.at(s)).collect();
    let band = CLASSIFY_BAND * values.iter().fold(1e-300, |a: f64, x| a.max(x.abs()));
    let mut signs: Vec<i8> = values
        .windows(2)
        .filter_map(|w| {
            let d = w[1] - w[0];
            if d > band {
                Some(1)
            } else if d < -band {
                Some(-1)
            } else {
                None
            }
        })
        .collect();
    signs.dedup();
    match signs.as_slice() {
        [] | [-1] => Classification::Decreasing,
        [1] => Classification::Increasing,
        [1, -1] => Classification::SinglePeaked,
        [-1, 1] => Classification::SingleDipped,
        _ => Classification::General,
    }
}
