//! Seeded randomness. Every stochastic operation takes an explicit generator;
//! there is no global state.

use rand::SeedableRng;
use rand_distr::{Distribution, StandardNormal};

/// xoshiro256** seeded through SplitMix64.
pub type Rng = rand_xoshiro::Xoshiro256StarStar;

pub fn seeded(seed: u64) -> Rng {
    Rng::seed_from_u64(seed)
}

/// An independent generator for a named sub-stream of `seed`, so that adding
/// draws to one stage never shifts another.
pub fn stream(seed: u64, stream: u64) -> Rng {
    seeded(seed ^ stream.wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15))
}

pub fn standard_normal(rng: &mut Rng) -> f64 {
    StandardNormal.sample(rng)
}
