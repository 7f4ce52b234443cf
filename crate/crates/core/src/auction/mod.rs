//! Bid-restricted auctions: dominant bids, winner and payment rules, exact
//! interim probabilities and Monte Carlo estimation.

mod exact;
mod rules;
mod simulate;

pub use exact::{exact_pooled_interim, induced_allocation, interim_probability, pooled_interim_binomial};
pub use rules::{dominant_bid, run_auction, AuctionError, AuctionOutcome, Bid, Draws};
pub use simulate::{simulate, BinEstimate, Estimate, SimulationReport};
