//! Keyed random streams.
//!
//! Every stochastic stage draws from its own ChaCha stream selected by
//! `(master seed, domain, index)`, so work units can be generated in any
//! order (or concurrently) and still merge into identical output.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Domain tags separating independent consumers of the same master seed.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[repr(u64)]
pub enum Domain {
    SpectrumJitter = 1,
    SourceX = 2,
    SourceP = 3,
    NoiseX = 4,
    NoiseP = 5,
    MonteCarlo = 6,
}

pub fn stream(seed: u64, domain: Domain, index: u64) -> ChaCha8Rng {
    // splitmix-style mixing of the domain into the key
    let mut key = seed ^ (domain as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15);
    key = (key ^ (key >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    key = (key ^ (key >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    key ^= key >> 31;
    let mut rng = ChaCha8Rng::seed_from_u64(key);
    rng.set_stream(index);
    rng
}
