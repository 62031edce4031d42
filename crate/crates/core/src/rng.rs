//! Deterministic random streams.
//!
//! Every random quantity is drawn from a ChaCha8 stream keyed by the user seed
//! (expanded with `SeedableRng::seed_from_u64`). The 64-bit stream id carries a
//! domain tag in its top byte and an agent or row index in the low 56 bits, so a
//! draw depends only on `(seed, domain, index)` and never on iteration order or
//! thread count.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Identifier printed by `--version` and recorded in reports.
pub const RNG_ALGORITHM: &str = "chacha8-stream(seed, domain<<56 | index)";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[repr(u8)]
pub enum Domain {
    Agent = 1,
    EdgeRow = 2,
    Pairs = 3,
}

pub fn stream(seed: u64, domain: Domain, index: u64) -> ChaCha8Rng {
    debug_assert!(index < (1 << 56));
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(((domain as u64) << 56) | (index & ((1 << 56) - 1)));
    rng
}

/// SplitMix64 finalizer, used to derive child seeds from structured keys.
pub fn mix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Seed derived from an ordered list of key parts.
pub fn derive_seed(parts: &[u64]) -> u64 {
    parts.iter().fold(0x6E65_7472_6567_u64, |acc, &p| mix(acc ^ mix(p)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    #[test]
    fn streams_are_reproducible_and_distinct() {
        let a: f64 = stream(7, Domain::Agent, 3).random();
        let b: f64 = stream(7, Domain::Agent, 3).random();
        let c: f64 = stream(7, Domain::Agent, 4).random();
        let d: f64 = stream(7, Domain::EdgeRow, 3).random();
        assert_eq!(a, b);
        assert_ne!(a, c);
        assert_ne!(a, d);
    }

    #[test]
    fn derived_seeds_depend_on_order() {
        assert_ne!(derive_seed(&[1, 2]), derive_seed(&[2, 1]));
        assert_eq!(derive_seed(&[1, 2]), derive_seed(&[1, 2]));
    }
}
