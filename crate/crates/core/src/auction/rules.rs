use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::mechanism::{ExtraBidPayment, Mechanism};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Bid {
    Abstain,
    At(f64),
}

impl Bid {
    pub fn value(self) -> Option<f64> {
        match self {
            Bid::Abstain => None,
            Bid::At(b) => Some(b),
        }
    }
}

/// Randomness consumed by one auction.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Draws {
    /// Whether bids at the extra bid count (one draw shared by all sellers).
    pub qualified: bool,
    /// Uniform in `[0, 1)`, picks among tied lowest bids.
    pub tie_break: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AuctionOutcome {
    pub winner: Option<usize>,
    pub payment: f64,
}

impl AuctionOutcome {
    pub fn trade(&self) -> bool {
        self.winner.is_some()
    }

    fn none() -> Self {
        AuctionOutcome {
            winner: None,
            payment: 0.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum AuctionError {
    #[error("seller {seller} bid {bid}, which lies in no bid interval")]
    InvalidBid { seller: usize, bid: f64 },
}

/// Weakly dominant bid for quality `q`.
///
/// Qualities inside `[lo_i, hi_i)` bid themselves, qualities in the gap below
/// an interval bid its bottom, qualities in `[top, B)` bid `B`, and everyone
/// else (including `q = top` or `q = B`) abstains.
pub fn dominant_bid(mech: &Mechanism, q: f64) -> Bid {
    for &(lo, hi) in &mech.intervals {
        if q < lo {
            return Bid::At(lo);
        }
        if q < hi {
            return Bid::At(q);
        }
    }
    match mech.extra_bid {
        Some(extra) if q < extra => Bid::At(extra),
        _ => Bid::Abstain,
    }
}

/// Runs one auction on explicit bids.
pub fn run_auction(mech: &Mechanism, bids: &[Bid], draws: Draws) -> Result<AuctionOutcome, AuctionError> {
    let extra = mech.extra_bid;
    let mut valid: Vec<(usize, f64)> = Vec::with_capacity(bids.len());
    for (seller, bid) in bids.iter().enumerate() {
        let Some(b) = bid.value() else { continue };
        if Some(b) == extra {
            if draws.qualified {
                valid.push((seller, b));
            }
        } else if mech.interval_of(b).is_some() {
            valid.push((seller, b));
        } else {
            return Err(AuctionError::InvalidBid { seller, bid: b });
        }
    }
    if valid.is_empty() {
        return Ok(AuctionOutcome::none());
    }

    let low = valid.iter().map(|v| v.1).fold(f64::INFINITY, f64::min);
    let tied: Vec<usize> = valid.iter().filter(|v| v.1 == low).map(|v| v.0).collect();
    let pick = ((draws.tie_break * tied.len() as f64) as usize).min(tied.len() - 1);
    let winner = tied[pick];
    if tied.len() > 1 {
        return Ok(AuctionOutcome {
            winner: Some(winner),
            payment: low,
        });
    }

    let second = valid
        .iter()
        .filter(|v| v.0 != winner)
        .map(|v| v.1)
        .fold(f64::INFINITY, f64::min);
    let top = mech.top();
    let winner_on_extra = Some(low) == extra;
    if second == f64::INFINITY {
        // A qualified extra bid doubles as a reserve for a lone standard winner.
        let payment = match extra {
            _ if winner_on_extra => low,
            Some(b) if draws.qualified => b,
            _ => top,
        };
        return Ok(AuctionOutcome {
            winner: Some(winner),
            payment,
        });
    }
    let k = valid.iter().filter(|v| v.1 == second).count() as f64;

    let payment = if winner_on_extra {
        second
    } else if Some(second) == extra {
        let base = (second + k * top) / (k + 1.0);
        match mech.extra_bid_payment {
            ExtraBidPayment::Unscaled => base,
            ExtraBidPayment::ZetaScaled => mech.zeta.unwrap_or(1.0) * base,
        }
    } else {
        let own = mech.interval_of(low);
        match mech.interval_of(second) {
            Some(j) if mech.payment_reduction && Some(j) != own && second == mech.intervals[j].0 => {
                (second + k * mech.gap_floor(j)) / (k + 1.0)
            }
            _ => second,
        }
    };
    Ok(AuctionOutcome {
        winner: Some(winner),
        payment,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    const A: f64 = 0.346;

    fn example1() -> Mechanism {
        Mechanism::bra(vec![(0.0, A), (1.0, 1.0)])
    }

    fn example2() -> Mechanism {
        let mut m = Mechanism::bra(vec![(0.287, 0.4335)]);
        m.extra_bid = Some(1.0);
        m.zeta = Some(0.0297);
        m
    }

    fn draws() -> Draws {
        Draws {
            qualified: true,
            tie_break: 0.0,
        }
    }

    #[test]
    fn dominant_bids() {
        let m = example1();
        assert_eq!(dominant_bid(&m, 0.2), Bid::At(0.2));
        assert_eq!(dominant_bid(&m, 0.7), Bid::At(1.0));
        assert_eq!(dominant_bid(&m, A), Bid::At(1.0));
        assert_eq!(dominant_bid(&m, 1.0), Bid::Abstain);
        let m2 = example2();
        assert_eq!(dominant_bid(&m2, 0.5), Bid::At(1.0));
        assert_eq!(dominant_bid(&m2, 0.1), Bid::At(0.287));
        assert_eq!(dominant_bid(&m2, 1.0), Bid::Abstain);
    }

    #[test]
    fn payment_reduction_against_gap_bid() {
        let out = run_auction(&example1(), &[Bid::At(0.2), Bid::At(1.0)], draws()).unwrap();
        assert_eq!(out.winner, Some(0));
        assert_abs_diff_eq!(out.payment, (1.0 + A) / 2.0, epsilon = 1e-15);
    }

    #[test]
    fn tie_at_top_pays_bid() {
        let m = example1();
        let first = run_auction(&m, &[Bid::At(1.0), Bid::At(1.0)], draws()).unwrap();
        let second = run_auction(
            &m,
            &[Bid::At(1.0), Bid::At(1.0)],
            Draws {
                qualified: true,
                tie_break: 0.75,
            },
        )
        .unwrap();
        assert_eq!(first.winner, Some(0));
        assert_eq!(second.winner, Some(1));
        assert_eq!(first.payment, 1.0);
    }

    #[test]
    fn second_price_inside_interval() {
        let out = run_auction(&example1(), &[Bid::At(0.2), Bid::At(0.3)], draws()).unwrap();
        assert_eq!(out.winner, Some(0));
        assert_eq!(out.payment, 0.3);
    }

    #[test]
    fn lone_bidder_pays_top() {
        let out = run_auction(&example1(), &[Bid::At(0.2), Bid::Abstain], draws()).unwrap();
        assert_eq!(out.payment, 1.0);
        let none = run_auction(&example1(), &[Bid::Abstain, Bid::Abstain], draws()).unwrap();
        assert!(!none.trade());
        assert_eq!(none.payment, 0.0);
    }

    #[test]
    fn disqualified_extra_bids_never_win() {
        let m = example2();
        let out = run_auction(
            &m,
            &[Bid::At(1.0), Bid::At(1.0)],
            Draws {
                qualified: false,
                tie_break: 0.3,
            },
        )
        .unwrap();
        assert!(!out.trade());
        let out = run_auction(&m, &[Bid::At(1.0), Bid::Abstain], draws()).unwrap();
        assert_eq!((out.winner, out.payment), (Some(0), 1.0));
    }

    #[test]
    fn lone_standard_winner_faces_random_reserve() {
        let m = example2();
        let bids = [Bid::At(0.3), Bid::Abstain];
        assert_eq!(run_auction(&m, &bids, draws()).unwrap().payment, 1.0);
        let unqualified = Draws {
            qualified: false,
            tie_break: 0.0,
        };
        assert_eq!(run_auction(&m, &bids, unqualified).unwrap().payment, 0.4335);
        let out = run_auction(&m, &[Bid::At(0.3), Bid::At(1.0)], unqualified).unwrap();
        assert_eq!(out.payment, 0.4335);
    }

    #[test]
    fn extra_bid_runner_up_payment() {
        let mut m = example2();
        let bids = [Bid::At(0.3), Bid::At(1.0)];
        let out = run_auction(&m, &bids, draws()).unwrap();
        assert_abs_diff_eq!(out.payment, (1.0 + 0.4335) / 2.0, epsilon = 1e-15);
        m.extra_bid_payment = ExtraBidPayment::ZetaScaled;
        let out = run_auction(&m, &bids, draws()).unwrap();
        assert_abs_diff_eq!(out.payment, 0.0297 * (1.0 + 0.4335) / 2.0, epsilon = 1e-15);
        let out = run_auction(
            &m,
            &bids,
            Draws {
                qualified: false,
                tie_break: 0.0,
            },
        )
        .unwrap();
        assert_eq!(out.payment, 0.4335);
    }

    #[test]
    fn disabled_reduction_pays_runner_up() {
        let mut m = example1();
        m.payment_reduction = false;
        let out = run_auction(&m, &[Bid::At(0.2), Bid::At(1.0)], draws()).unwrap();
        assert_eq!(out.payment, 1.0);
    }

    #[test]
    fn bids_outside_intervals_are_rejected() {
        let err = run_auction(&example1(), &[Bid::At(0.5), Bid::At(1.0)], draws()).unwrap_err();
        assert_eq!(err, AuctionError::InvalidBid { seller: 0, bid: 0.5 });
    }
}
