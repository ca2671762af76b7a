//! Deterministic seed derivation for independent protocol streams.
//!
//! Every randomized call site derives its own generator from the run seed and
//! a list of integer tags (parameter index, digit order, sign pair, repeat).
//! Results are therefore reproducible regardless of execution order.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// One splitmix64 round; good enough to decorrelate tagged streams.
fn splitmix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

pub fn mix(seed: u64, tag: u64) -> u64 {
    splitmix(seed ^ splitmix(tag))
}

/// Seeded generator for the stream identified by `tags` under `base`.
pub fn stream(base: u64, tags: &[u64]) -> ChaCha8Rng {
    let mut s = splitmix(base);
    for (i, &t) in tags.iter().enumerate() {
        s = mix(s, t.wrapping_add(i as u64 + 1));
    }
    ChaCha8Rng::seed_from_u64(s)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    #[test]
    fn streams_are_reproducible() {
        let a: u64 = stream(42, &[1, 2, 3]).gen();
        let b: u64 = stream(42, &[1, 2, 3]).gen();
        assert_eq!(a, b);
    }

    #[test]
    fn streams_differ_by_tag() {
        let a: u64 = stream(42, &[1, 2, 3]).gen();
        let b: u64 = stream(42, &[1, 3, 2]).gen();
        let c: u64 = stream(43, &[1, 2, 3]).gen();
        assert_ne!(a, b);
        assert_ne!(a, c);
    }
}
