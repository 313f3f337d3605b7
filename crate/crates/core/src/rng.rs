//! Seeded random streams. Every Monte Carlo unit of work (a replicate, a time
//! step inside it, a chain) draws from its own ChaCha stream derived from the
//! run seed, so results do not depend on scheduling.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type StreamRng = ChaCha8Rng;

/// Independent stream for `(seed, replicate, step)`.
pub fn substream(seed: u64, replicate: u64, step: u64) -> StreamRng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(replicate.wrapping_mul(0x1_0000_0000).wrapping_add(step));
    rng
}

/// Stream owned by a whole replicate or chain.
pub fn stream(seed: u64, replicate: u64) -> StreamRng {
    substream(seed, replicate, u32::MAX as u64)
}
