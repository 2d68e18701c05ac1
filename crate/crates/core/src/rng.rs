//! Deterministic random streams.
//!
//! Every Monte Carlo task draws from its own ChaCha8 stream: the root seed
//! selects the key and the task index selects the stream number, so results
//! do not depend on how tasks are scheduled across threads.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type SimRng = ChaCha8Rng;

/// Root stream for `seed`.
pub fn root(seed: u64) -> SimRng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Independent stream for task `index` under `seed`.
pub fn task_stream(seed: u64, index: u64) -> SimRng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}
