//! Per-trial random streams.
//!
//! Trial `i` of a run seeded with `seed` always draws from ChaCha8 stream `i`
//! under key `seed`, so results never depend on how trials are partitioned
//! across workers.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub fn trial_rng(seed: u64, trial: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(trial);
    rng
}
