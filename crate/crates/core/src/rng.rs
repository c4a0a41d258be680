//! Deterministic random streams.
//!
//! Every run has one master seed. Initial-condition sampling draws from
//! stream 0 of a ChaCha8 generator keyed by that seed; trajectory `i` draws
//! from stream `i + 1`. Streams are independent, so results do not depend on
//! the order or the thread in which trajectories run.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub fn sampling_rng(seed: u64) -> ChaCha8Rng {
    let mut r = ChaCha8Rng::seed_from_u64(seed);
    r.set_stream(0);
    r
}

pub fn trajectory_rng(seed: u64, index: usize) -> ChaCha8Rng {
    let mut r = ChaCha8Rng::seed_from_u64(seed);
    r.set_stream(index as u64 + 1);
    r
}
