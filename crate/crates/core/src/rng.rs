//! Seeded random streams. Every consumer draws from its own ChaCha stream
//! derived from the one scenario seed, so pinning one component's draws never
//! shifts another's.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stream {
    Planner = 1,
    Repair = 2,
    Mission = 3,
    Disturbance = 4,
    Instances = 5,
}

pub fn stream(seed: u64, which: Stream) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(which as u64);
    rng
}

/// Stream for a numbered sub-task (replan round, robot, instance) of `which`.
pub fn substream(seed: u64, which: Stream, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ index.wrapping_mul(0x9E37_79B9_7F4A_7C15));
    rng.set_stream(which as u64);
    rng
}
