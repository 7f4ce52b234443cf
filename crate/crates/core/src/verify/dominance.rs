use serde::{Deserialize, Serialize};

use crate::auction::{dominant_bid, run_auction, Bid, Draws};
use crate::exec::Execution;
use crate::mechanism::Mechanism;

/// Gains above this count as violations.
pub const GAIN_TOL: f64 = 1e-9;
/// Offset used to probe either side of every interval endpoint.
pub const EDGE_EPS: f64 = 1e-4;
/// Tie-break draws per auction; divisible by every tie size up to 5.
const TIE_SLOTS: usize = 60;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Violation {
    pub quality: f64,
    pub prescribed: Bid,
    pub deviation: Bid,
    pub opponents: Vec<Bid>,
    pub gain: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DominanceReport {
    pub n: usize,
    pub qualities: usize,
    pub profiles: usize,
    pub max_gain: f64,
    pub violations: Vec<Violation>,
}

impl DominanceReport {
    pub fn passed(&self) -> bool {
        self.violations.is_empty()
    }
}

/// Interval endpoints and midpoints, the extra bid, and abstention.
pub fn bid_grid(mech: &Mechanism) -> Vec<Bid> {
    let mut values = Vec::new();
    for &(lo, hi) in &mech.intervals {
        values.extend([lo, 0.5 * (lo + hi), hi]);
    }
    values.extend(mech.extra_bid);
    values.sort_by(f64::total_cmp);
    values.dedup();
    let mut out: Vec<Bid> = values.into_iter().map(Bid::At).collect();
    out.push(Bid::Abstain);
    out
}

/// Endpoints and their `EDGE_EPS` neighbours, gap midpoints and a uniform
/// grid of `uniform + 1` points, all within `[0, 1]`.
pub fn quality_grid(mech: &Mechanism, uniform: usize) -> Vec<f64> {
    let mut edges: Vec<f64> = mech.intervals.iter().flat_map(|&(lo, hi)| [lo, hi]).collect();
    edges.extend(mech.extra_bid);
    let mut out: Vec<f64> = (0..=uniform).map(|k| k as f64 / uniform as f64).collect();
    for &e in &edges {
        out.extend([e - EDGE_EPS, e, e + EDGE_EPS]);
    }
    for i in 0..mech.intervals.len() {
        out.push(0.5 * (mech.gap_floor(i) + mech.intervals[i].0));
    }
    if let Some(extra) = mech.extra_bid {
        out.push(0.5 * (mech.top() + extra));
        out.push(0.5 * (extra + 1.0));
    }
    let mut out: Vec<f64> = out.into_iter().filter(|q| (0.0..=1.0).contains(q)).collect();
    out.sort_by(f64::total_cmp);
    out.dedup();
    out
}

/// Expected payoff of seller 0 with quality `q` bidding `own` against fixed
/// opponent bids, averaged exactly over tie-breaks and the qualification draw.
pub fn expected_payoff(mech: &Mechanism, q: f64, own: Bid, opponents: &[Bid]) -> f64 {
    let mut bids = Vec::with_capacity(opponents.len() + 1);
    bids.push(own);
    bids.extend_from_slice(opponents);
    let lotteries: Vec<(bool, f64)> = match mech.zeta {
        Some(z) if mech.extra_bid.is_some() => vec![(true, z), (false, 1.0 - z)],
        _ => vec![(true, 1.0)],
    };
    let mut total = 0.0;
    for (qualified, weight) in lotteries {
        if weight == 0.0 {
            continue;
        }
        let mut acc = 0.0;
        for slot in 0..TIE_SLOTS {
            let draws = Draws {
                qualified,
                tie_break: (slot as f64 + 0.5) / TIE_SLOTS as f64,
            };
            if let Ok(out) = run_auction(mech, &bids, draws) {
                if out.winner == Some(0) {
                    acc += out.payment - q;
                }
            }
        }
        total += weight * acc / TIE_SLOTS as f64;
    }
    total
}

/// Multisets of size `k` from `grid`.
fn profiles(grid: &[Bid], k: usize) -> Vec<Vec<Bid>> {
    fn rec(grid: &[Bid], k: usize, start: usize, cur: &mut Vec<Bid>, out: &mut Vec<Vec<Bid>>) {
        if cur.len() == k {
            out.push(cur.clone());
            return;
        }
        for i in start..grid.len() {
            cur.push(grid[i]);
            rec(grid, k, i, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    rec(grid, k, 0, &mut Vec::with_capacity(k), &mut out);
    out
}

/// Compares the dominant bid of every quality against every grid deviation,
/// for every opponent profile drawn from the grid.
pub fn dominance_check(
    mech: &Mechanism,
    qualities: &[f64],
    bids: &[Bid],
    n: usize,
    exec: Execution,
) -> DominanceReport {
    let opponents = profiles(bids, n - 1);
    let per_quality = exec.map_slice(qualities, |&q| {
        let prescribed = dominant_bid(mech, q);
        let mut found = Vec::new();
        let mut max_gain = f64::NEG_INFINITY;
        for profile in &opponents {
            let base = expected_payoff(mech, q, prescribed, profile);
            for &dev in bids {
                if dev == prescribed {
                    continue;
                }
                let gain = expected_payoff(mech, q, dev, profile) - base;
                max_gain = max_gain.max(gain);
                if gain > GAIN_TOL {
                    found.push(Violation {
                        quality: q,
                        prescribed,
                        deviation: dev,
                        opponents: profile.clone(),
                        gain,
                    });
                }
            }
        }
        (max_gain, found)
    });
    let mut violations = Vec::new();
    let mut max_gain = f64::NEG_INFINITY;
    for (g, v) in per_quality {
        max_gain = max_gain.max(g);
        violations.extend(v);
    }
    DominanceReport {
        n,
        qualities: qualities.len(),
        profiles: opponents.len(),
        max_gain: if max_gain.is_finite() { max_gain } else { 0.0 },
        violations,
    }
}

/// [`dominance_check`] over the standard quality and bid grids.
pub fn check_mechanism(mech: &Mechanism, n: usize, exec: Execution) -> DominanceReport {
    dominance_check(mech, &quality_grid(mech, 100), &bid_grid(mech), n, exec)
}
