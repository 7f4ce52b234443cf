use serde::{Deserialize, Serialize};

use super::{exclusion_cutoff, payoff, InterimAllocation, Segment, SegmentKind, Which};
use crate::auction::exact_pooled_interim;
use crate::calculus::{iron, Grid, IroningResult, Piece, QuantileSurplus};
use crate::env::Environment;
use crate::quadrature::integrate;

/// Accept a multiplier once the buyer's payoff is within this of zero.
const IR_TOL: f64 = 1e-6;
/// Step-1 acceptance slack on the buyer's payoff.
const STEP1_TOL: f64 = 1e-10;
/// A pooled stretch is flat-zero when `|slope| <= FLAT_ZERO_TOL * scale`.
const FLAT_ZERO_TOL: f64 = 1e-7;
/// Relative spread below which the Lagrangian surplus counts as constant; the
/// hull cannot resolve slopes much smaller than this.
const FLAT_FACE_TOL: f64 = 1e-6;
/// Distance within which a pooled piece counts as starting at the cutoff.
const JOIN_TOL: f64 = 1e-12;
/// Relative width at which the multiplier bisection stops.
const LAMBDA_RTOL: f64 = 1e-14;
/// Doublings of the multiplier bracket before giving up.
const MAX_DOUBLINGS: u32 = 50;
/// Multipliers tried by the grid-search fallback.
const FALLBACK_POINTS: usize = 200;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Status {
    Optimal,
    /// Nothing is ever bought; the trivial mechanism is optimal.
    NoTrade,
    /// No multiplier restored a non-negative buyer payoff.
    Infeasible,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DualSample {
    pub lambda: f64,
    pub buyer_payoff: f64,
}

#[derive(Debug, Clone)]
pub struct WeightedSolution {
    pub allocation: InterimAllocation,
    pub lambda_star: f64,
    pub s_plus: f64,
    pub s_zero: f64,
    /// Tail value on `[s_plus, s_zero)`, present iff `s_plus < s_zero`.
    pub p_bar: Option<f64>,
    pub step: u8,
    pub status: Status,
    /// Whether the sampled map `lambda -> buyer payoff` was non-decreasing.
    pub dual_monotone: bool,
    /// Whether `p_bar` was clamped to the conditional mean.
    pub clamp_binding: bool,
    pub dual_samples: Vec<DualSample>,
    /// Ironing of the Lagrangian surplus at `lambda_star`.
    pub ironing: IroningResult,
}

impl WeightedSolution {
    /// Pooling intervals below `s_plus`.
    pub fn pooling(&self) -> Vec<(f64, f64)> {
        self.allocation
            .segments
            .iter()
            .filter(|g| matches!(g.kind, SegmentKind::Pooled { .. }))
            .map(|g| (g.lo, g.hi))
            .collect()
    }

    /// Conditional mean of the competitive allocation over the tail.
    pub fn tail_mean(&self) -> Option<f64> {
        self.p_bar
            .map(|_| exact_pooled_interim(self.s_plus, self.s_zero, self.allocation.n))
    }

    /// `lambda* x buyer payoff`.
    pub fn slackness_residual(&self) -> f64 {
        self.lambda_star * payoff(&self.ironing.env, &self.allocation, Which::Buyer)
    }
}

struct Candidate {
    ironing: IroningResult,
    allocation: InterimAllocation,
    buyer: f64,
}

fn candidate(env: &Environment, lambda: f64, grid: Grid) -> Candidate {
    let ironing = iron(env, env.gamma(), lambda, grid);
    let allocation = InterimAllocation::from_ironing(&ironing, exclusion_cutoff(&ironing));
    let buyer = payoff(env, &allocation, Which::Buyer);
    Candidate {
        ironing,
        allocation,
        buyer,
    }
}

fn finish(c: Candidate, lambda: f64, step: u8, samples: Vec<DualSample>, monotone: bool) -> WeightedSolution {
    let cutoff = c.allocation.cutoff;
    WeightedSolution {
        status: if cutoff > 0.0 { Status::Optimal } else { Status::NoTrade },
        allocation: c.allocation,
        lambda_star: lambda,
        s_plus: cutoff,
        s_zero: cutoff,
        p_bar: None,
        step,
        dual_monotone: monotone,
        clamp_binding: false,
        dual_samples: samples,
        ironing: c.ironing,
    }
}

/// [`solve_weighted_on`] with the default grid.
pub fn solve_weighted(env: &Environment) -> WeightedSolution {
    solve_weighted_on(env, Grid::default())
}

/// Optimal allocation for the `gamma`-weighted objective, subject to a
/// non-negative buyer payoff when `env.buyer_ir()` is set.
pub fn solve_weighted_on(env: &Environment, grid: Grid) -> WeightedSolution {
    let first = candidate(env, 0.0, grid);
    let mut samples = vec![DualSample {
        lambda: 0.0,
        buyer_payoff: first.buyer,
    }];
    if !env.buyer_ir() || first.buyer >= -STEP1_TOL {
        return finish(first, 0.0, 1, samples, true);
    }

    let mut lo = 0.0;
    let mut lo_cand = first;
    let mut hi = 1.0;
    let mut hi_cand = candidate(env, hi, grid);
    samples.push(DualSample {
        lambda: hi,
        buyer_payoff: hi_cand.buyer,
    });
    let mut doublings = 0;
    while hi_cand.buyer < 0.0 {
        doublings += 1;
        if doublings > MAX_DOUBLINGS {
            let mut sol = finish(
                Candidate {
                    allocation: InterimAllocation::zero(env.n()),
                    buyer: 0.0,
                    ironing: hi_cand.ironing,
                },
                hi,
                2,
                samples,
                true,
            );
            sol.status = Status::Infeasible;
            return sol;
        }
        lo = hi;
        lo_cand = hi_cand;
        hi *= 2.0;
        hi_cand = candidate(env, hi, grid);
        samples.push(DualSample {
            lambda: hi,
            buyer_payoff: hi_cand.buyer,
        });
    }
    while hi - lo > LAMBDA_RTOL * hi {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        let c = candidate(env, mid, grid);
        samples.push(DualSample {
            lambda: mid,
            buyer_payoff: c.buyer,
        });
        if c.buyer < 0.0 {
            lo = mid;
            lo_cand = c;
        } else {
            hi = mid;
            hi_cand = c;
        }
    }

    if !is_monotone(&samples) {
        return grid_search(env, grid, hi, samples);
    }
    if hi_cand.buyer <= IR_TOL {
        return finish(hi_cand, hi, 2, samples, true);
    }

    let s_plus = hi_cand.allocation.cutoff;
    let s_zero = lo_cand.allocation.cutoff;
    let flat_zero = hi_cand.ironing.pieces.iter().any(|p| match *p {
        Piece::Pooled { lo, slope, .. } => {
            (lo - s_plus).abs() <= JOIN_TOL && slope.abs() <= FLAT_ZERO_TOL * hi_cand.ironing.scale
        }
        _ => false,
    });
    let g = QuantileSurplus::buyer(env);
    let tail_integral = integrate(|s| g.at(s), s_plus, s_zero);
    if !(s_zero > s_plus) || !flat_zero || !(tail_integral < 0.0) {
        if let Some(sol) = split_flat_face(env, grid, hi, &hi_cand, &samples) {
            return sol;
        }
        return finish(hi_cand, hi, 2, samples, true);
    }

    let mean = exact_pooled_interim(s_plus, s_zero, env.n());
    let raw = hi_cand.buyer / (-(env.n() as f64) * tail_integral);
    let p_bar = raw.min(mean);
    let mut allocation = hi_cand.allocation;
    allocation.segments.push(Segment {
        lo: s_plus,
        hi: s_zero,
        kind: SegmentKind::Tail { value: p_bar },
    });
    allocation.cutoff = s_zero;
    WeightedSolution {
        allocation,
        lambda_star: hi,
        s_plus,
        s_zero,
        p_bar: Some(p_bar),
        step: 3,
        status: Status::Optimal,
        dual_monotone: true,
        clamp_binding: raw > mean,
        dual_samples: samples,
        ironing: hi_cand.ironing,
    }
}

/// Handles a multiplier at which the Lagrangian surplus is constant and
/// positive on the whole unit interval (a valuation linear in quality). Every
/// split "pool `[0, x]`, competitive above" is then optimal for the
/// Lagrangian, and the buyer's payoff falls as `x` grows, so `x` is bisected
/// to make it vanish.
fn split_flat_face(
    env: &Environment,
    grid: Grid,
    lambda: f64,
    hi: &Candidate,
    samples: &[DualSample],
) -> Option<WeightedSolution> {
    let phi = QuantileSurplus::new(env, env.gamma(), lambda);
    let (min, max) = grid
        .nodes()
        .map(|s| phi.at(s))
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), v| (a.min(v), b.max(v)));
    if !(min > 0.0) || max - min > FLAT_FACE_TOL * hi.ironing.scale {
        return None;
    }
    let n = env.n();
    let split = |x: f64| {
        let mut allocation = InterimAllocation::competitive(n, 1.0);
        if x > 0.0 {
            allocation.segments = vec![
                Segment {
                    lo: 0.0,
                    hi: x,
                    kind: SegmentKind::Pooled {
                        value: exact_pooled_interim(0.0, x, n),
                    },
                },
                Segment {
                    lo: x,
                    hi: 1.0,
                    kind: SegmentKind::Competitive,
                },
            ];
        }
        let buyer = payoff(env, &allocation, Which::Buyer);
        (allocation, buyer)
    };
    let (mut best, at_zero) = split(0.0);
    if at_zero < 0.0 {
        return None;
    }
    let (mut a, mut b) = (0.0, 1.0);
    while b - a > LAMBDA_RTOL {
        let mid = 0.5 * (a + b);
        let (allocation, buyer) = split(mid);
        if buyer >= 0.0 {
            a = mid;
            best = allocation;
        } else {
            b = mid;
        }
    }
    Some(WeightedSolution {
        status: Status::Optimal,
        s_plus: 1.0,
        s_zero: 1.0,
        allocation: best,
        lambda_star: lambda,
        p_bar: None,
        step: 3,
        dual_monotone: true,
        clamp_binding: false,
        dual_samples: samples.to_vec(),
        ironing: hi.ironing.clone(),
    })
}

fn is_monotone(samples: &[DualSample]) -> bool {
    let mut sorted = samples.to_vec();
    sorted.sort_by(|a, b| a.lambda.total_cmp(&b.lambda));
    sorted
        .windows(2)
        .all(|w| w[1].buyer_payoff >= w[0].buyer_payoff - 1e-9)
}

/// Best feasible multiplier on a geometric grid up to `lambda_max`.
fn grid_search(env: &Environment, grid: Grid, lambda_max: f64, samples: Vec<DualSample>) -> WeightedSolution {
    let objective = Which::Weighted(env.gamma());
    let mut best: Option<(f64, f64, Candidate)> = None;
    for i in 0..FALLBACK_POINTS {
        let t = i as f64 / (FALLBACK_POINTS - 1) as f64;
        let lambda = lambda_max * 2f64.powf(-30.0 * (1.0 - t));
        let c = candidate(env, lambda, grid);
        if c.buyer < -IR_TOL {
            continue;
        }
        let value = payoff(env, &c.allocation, objective);
        if best.as_ref().is_none_or(|b| value > b.1) {
            best = Some((lambda, value, c));
        }
    }
    match best {
        Some((lambda, _, c)) => finish(c, lambda, 2, samples, false),
        None => {
            let c = candidate(env, lambda_max, grid);
            finish(c, lambda_max, 2, samples, false)
        }
    }
}
