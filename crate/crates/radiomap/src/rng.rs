//! Named, seeded substreams.
//!
//! All randomness in the crate flows from one master seed through here.
//! Substreams are independent ChaCha streams derived from (seed, name,
//! index), so e.g. changing the number of MC iterations never perturbs
//! world generation.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn fnv1a(name: &str) -> u64 {
    let mut h: u64 = 0xcbf29ce484222325;
    for b in name.as_bytes() {
        h ^= *b as u64;
        h = h.wrapping_mul(0x100000001b3);
    }
    h
}

/// A deterministic substream of the master seed.
pub fn substream(master_seed: u64, name: &str, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(master_seed);
    rng.set_stream(fnv1a(name).wrapping_add(index.wrapping_mul(0x9e3779b97f4a7c15)));
    rng
}

/// A derived u64 seed for keyed-uniform tables (see [`unit_uniform`]).
pub fn derive_seed(master_seed: u64, name: &str, index: u64) -> u64 {
    splitmix(splitmix(master_seed ^ fnv1a(name)) ^ index)
}

fn splitmix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e3779b97f4a7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58476d1ce4e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d049bb133111eb);
    z ^ (z >> 31)
}

/// Deterministic uniform in [0, 1) keyed by (seed, a, b).
///
/// Used for common-random-number Monte-Carlo draws: the same (iteration,
/// user) key yields the same coin regardless of which subset is being
/// scored, which keeps paired comparisons low-noise and cache-friendly.
pub fn unit_uniform(seed: u64, a: u64, b: u64) -> f64 {
    let z = splitmix(splitmix(splitmix(seed) ^ a) ^ b.wrapping_mul(0x2545f4914f6cdd1d));
    (z >> 11) as f64 / (1u64 << 53) as f64
}
