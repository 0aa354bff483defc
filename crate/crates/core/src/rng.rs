//! Seeded random number generation.
//!
//! Every stochastic routine draws from `ChaCha8Rng` (rand_chacha 0.9), seeded
//! with `seed_from_u64(seed)` and an optional stream selector. Outputs are
//! therefore bit-reproducible per `(seed, stream)` on any platform.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type PeelRng = ChaCha8Rng;

pub fn seeded(seed: u64) -> PeelRng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Independent stream `stream` under the same seed.
pub fn seeded_stream(seed: u64, stream: u64) -> PeelRng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}
