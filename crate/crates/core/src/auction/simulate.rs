use rand::RngExt;
use serde::{Deserialize, Serialize};

use crate::env::Environment;
use crate::exec::Execution;
use crate::mechanism::Mechanism;
use crate::rng::trial_rng;
use crate::solver::{payoff, Which};

use super::exact::induced_allocation;
use super::rules::{dominant_bid, run_auction, Bid, Draws};

/// Trials per work unit; chunks are merged in index order.
const CHUNK: u64 = 8192;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    pub mean: f64,
    /// `None` for a single trial.
    pub std_error: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BinEstimate {
    pub bin_lo: f64,
    pub bin_hi: f64,
    pub empirical_p: f64,
    pub analytic_p: f64,
    pub std_err: Option<f64>,
    pub draws: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimulationReport {
    pub trials: u64,
    pub seed: u64,
    pub buyer_payoff: Estimate,
    pub social_surplus: Estimate,
    pub analytic_buyer_payoff: f64,
    pub analytic_social_surplus: f64,
    pub bins: Vec<BinEstimate>,
}

#[derive(Debug, Clone)]
struct Tally {
    trials: u64,
    buyer: (f64, f64),
    social: (f64, f64),
    draws: Vec<u64>,
    wins: Vec<u64>,
}

impl Tally {
    fn new(bins: usize) -> Self {
        Tally {
            trials: 0,
            buyer: (0.0, 0.0),
            social: (0.0, 0.0),
            draws: vec![0; bins],
            wins: vec![0; bins],
        }
    }

    fn merge(&mut self, other: &Tally) {
        self.trials += other.trials;
        self.buyer.0 += other.buyer.0;
        self.buyer.1 += other.buyer.1;
        self.social.0 += other.social.0;
        self.social.1 += other.social.1;
        for (a, b) in self.draws.iter_mut().zip(&other.draws) {
            *a += b;
        }
        for (a, b) in self.wins.iter_mut().zip(&other.wins) {
            *a += b;
        }
    }
}

fn estimate(sum: f64, sum_sq: f64, n: u64) -> Estimate {
    let mean = sum / n as f64;
    let std_error = (n > 1).then(|| {
        let var = ((sum_sq - sum * mean) / (n - 1) as f64).max(0.0);
        (var / n as f64).sqrt()
    });
    Estimate { mean, std_error }
}

/// Monte Carlo estimate of payoffs and the interim allocation under
/// dominant-strategy play. Results depend only on `(seed, trials, bins)`.
pub fn simulate(
    env: &Environment,
    mech: &Mechanism,
    trials: u64,
    seed: u64,
    bins: usize,
    exec: Execution,
) -> SimulationReport {
    let n = env.n();
    let zeta = mech.zeta.unwrap_or(0.0);
    let chunks = trials.div_ceil(CHUNK) as usize;

    let run_chunk = |c: usize| {
        let mut tally = Tally::new(bins);
        let start = c as u64 * CHUNK;
        let end = (start + CHUNK).min(trials);
        let mut u = vec![0.0; n];
        let mut q = vec![0.0; n];
        let mut bids = vec![Bid::Abstain; n];
        for t in start..end {
            let mut rng = trial_rng(seed, t);
            for i in 0..n {
                u[i] = rng.random::<f64>();
                q[i] = env.dist().quantile(u[i]);
                bids[i] = dominant_bid(mech, q[i]);
            }
            let draws = Draws {
                qualified: rng.random::<f64>() < zeta,
                tie_break: rng.random::<f64>(),
            };
            let out = run_auction(mech, &bids, draws).expect("dominant bids are always valid");
            let (buyer, social) = match out.winner {
                Some(w) => {
                    let v = env.val().value(q[w]);
                    (v - out.payment, v - q[w])
                }
                None => (0.0, 0.0),
            };
            tally.trials += 1;
            tally.buyer.0 += buyer;
            tally.buyer.1 += buyer * buyer;
            tally.social.0 += social;
            tally.social.1 += social * social;
            for i in 0..n {
                let b = ((u[i] * bins as f64) as usize).min(bins - 1);
                tally.draws[b] += 1;
                if out.winner == Some(i) {
                    tally.wins[b] += 1;
                }
            }
        }
        tally
    };

    let parts = exec.map_range(chunks, run_chunk);
    let mut total = Tally::new(bins);
    for p in &parts {
        total.merge(p);
    }

    let induced = induced_allocation(mech, env);
    let bins_out = (0..bins)
        .map(|b| {
            let lo = b as f64 / bins as f64;
            let hi = (b + 1) as f64 / bins as f64;
            let draws = total.draws[b];
            let p = if draws > 0 {
                total.wins[b] as f64 / draws as f64
            } else {
                0.0
            };
            BinEstimate {
                bin_lo: lo,
                bin_hi: hi,
                empirical_p: p,
                analytic_p: induced.average(lo, hi),
                std_err: (draws > 1).then(|| (p * (1.0 - p) / draws as f64).sqrt()),
                draws,
            }
        })
        .collect();

    SimulationReport {
        trials,
        seed,
        buyer_payoff: estimate(total.buyer.0, total.buyer.1, trials),
        social_surplus: estimate(total.social.0, total.social.1, trials),
        analytic_buyer_payoff: payoff(env, &induced, Which::Buyer),
        analytic_social_surplus: payoff(env, &induced, Which::Social),
        bins: bins_out,
    }
}
