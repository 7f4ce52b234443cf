use crate::env::Environment;
use crate::mechanism::Mechanism;
use crate::solver::{InterimAllocation, Segment, SegmentKind};

use super::rules::{dominant_bid, Bid};

/// Interim winning probability of a seller pooled with everyone whose quantile
/// lies in `[a, b]`: `[(1-a)^n - (1-b)^n] / (n (b - a))`, evaluated through
/// the factored sum so that `a = b` gives the limit `(1-a)^(n-1)`.
pub fn exact_pooled_interim(a: f64, b: f64, n: usize) -> f64 {
    let (x, y) = (1.0 - a, 1.0 - b);
    let mut acc = 0.0;
    let mut xp = 1.0;
    for j in 0..n {
        acc += xp * y.powi((n - 1 - j) as i32);
        xp *= x;
    }
    acc / n as f64
}

/// The same probability by conditioning on how many of the `n - 1` opponents
/// fall in the pool: `sum_k C(n-1, k) (b-a)^k (1-b)^(n-1-k) / (k+1)`.
pub fn pooled_interim_binomial(a: f64, b: f64, n: usize) -> f64 {
    let m = n - 1;
    let mut choose = 1.0;
    let mut acc = 0.0;
    for k in 0..=m {
        acc += choose * (b - a).powi(k as i32) * (1.0 - b).powi((m - k) as i32) / (k + 1) as f64;
        choose = choose * (m - k) as f64 / (k + 1) as f64;
    }
    acc
}

/// Probability that a seller of quality `q` wins when everyone plays the
/// dominant strategy.
pub fn interim_probability(mech: &Mechanism, env: &Environment, q: f64) -> f64 {
    let f = |x: f64| env.dist().cdf(x);
    let n = env.n();
    let Bid::At(b) = dominant_bid(mech, q) else {
        return 0.0;
    };
    if let Some((extra, zeta)) = mech.augmentation() {
        if b == extra {
            return zeta * exact_pooled_interim(f(mech.top()), f(extra), n);
        }
    }
    if let Some(i) = mech.interval_of(b) {
        let floor = mech.gap_floor(i);
        if b == mech.intervals[i].0 && floor < b && q <= b {
            return exact_pooled_interim(f(floor), f(b), n);
        }
    }
    (1.0 - f(q)).powi(n as i32 - 1)
}

/// Quantile interim allocation induced by dominant-strategy play.
pub fn induced_allocation(mech: &Mechanism, env: &Environment) -> InterimAllocation {
    let f = |x: f64| env.dist().cdf(x);
    let n = env.n();
    let mut segments = Vec::with_capacity(2 * mech.intervals.len() + 1);
    for (i, &(lo, hi)) in mech.intervals.iter().enumerate() {
        let floor = mech.gap_floor(i);
        if floor < lo {
            let (a, b) = (f(floor), f(lo));
            segments.push(Segment {
                lo: a,
                hi: b,
                kind: SegmentKind::Pooled {
                    value: exact_pooled_interim(a, b, n),
                },
            });
        }
        if lo < hi {
            segments.push(Segment {
                lo: f(lo),
                hi: f(hi),
                kind: SegmentKind::Competitive,
            });
        }
    }
    let mut cutoff = f(mech.top());
    if let Some((extra, zeta)) = mech.augmentation() {
        let (a, b) = (cutoff, f(extra));
        segments.push(Segment {
            lo: a,
            hi: b,
            kind: SegmentKind::Tail {
                value: zeta * exact_pooled_interim(a, b, n),
            },
        });
        cutoff = b;
    }
    InterimAllocation {
        n,
        segments,
        cutoff,
    }
}
