//! Seedable random streams.
//!
//! Every consumer (an SA iteration, a verification batch, a sweep run) draws
//! from its own substream identified by `(master seed, domain, index)`. The
//! streams are ChaCha8 instances keyed by the mixed `(seed, domain)` pair and
//! positioned on stream `index`, so they are independent and can be created in
//! any order or on any thread.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// The generator type handed to models and distributions.
pub type SimRng = ChaCha8Rng;

/// Stream domains, kept distinct so that solving and verifying with the same
/// master seed never reuse randomness.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[repr(u64)]
pub enum Domain {
    Iteration = 1,
    Verification = 2,
    Test = 3,
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Derives the substream `index` of `domain` under `master`.
pub fn substream(master: u64, domain: Domain, index: u64) -> SimRng {
    let mut key = [0u8; 32];
    let mut state = master ^ splitmix64(domain as u64);
    for chunk in key.chunks_exact_mut(8) {
        state = splitmix64(state);
        chunk.copy_from_slice(&state.to_le_bytes());
    }
    let mut rng = ChaCha8Rng::from_seed(key);
    rng.set_stream(index);
    rng
}
