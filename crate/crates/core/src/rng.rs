//! Seeded RNG streams.
//!
//! Every consumer of randomness draws from its own ChaCha stream derived from
//! the experiment seed, so two methods run with the same seed see the same
//! world (mobility, arrivals, fading, radar noise) and differ only in their
//! decisions.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

pub type SimRng = ChaCha8Rng;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[repr(u64)]
pub enum Stream {
    Topology = 1,
    Mobility = 2,
    Arrivals = 3,
    Channel = 4,
    Perception = 5,
    Policy = 6,
    AgentInit = 7,
    Exploration = 8,
    Replay = 9,
    Solver = 10,
}

pub fn stream(seed: u64, which: Stream) -> SimRng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(which as u64);
    rng
}

/// Sub-stream for a numbered worker of a given stream family.
pub fn substream(seed: u64, which: Stream, index: u64) -> SimRng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ index.wrapping_mul(0x9E37_79B9_7F4A_7C15));
    rng.set_stream(which as u64);
    rng
}

#[inline]
pub fn normal<R: rand::Rng + ?Sized>(rng: &mut R) -> f64 {
    StandardNormal.sample(rng)
}
