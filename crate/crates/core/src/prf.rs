//! Seeded pseudorandom function used for every hash in the crate.
//!
//! All randomness that must be reproducible across the streaming and offline
//! paths (edge levels, sketch buckets, fingerprint bases) is a pure function of
//! a 64-bit key and the input, so two parties holding the same master seed
//! agree without sharing state.

/// SplitMix64 finalizer. Bijective on `u64`.
#[inline]
pub fn mix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Keyed PRF on one word.
#[inline]
pub fn prf(key: u64, x: u64) -> u64 {
    mix64(
        mix64(key ^ 0x9e37_79b9_7f4a_7c15)
            .wrapping_add(x)
            .wrapping_mul(0xd6e8_feb8_6659_fd93)
            ^ key,
    )
}

/// Keyed PRF on a pair of words (order-sensitive).
#[inline]
pub fn prf2(key: u64, a: u64, b: u64) -> u64 {
    prf(prf(key, a), b)
}

/// Derives an independent child seed. Seeds form a tree rooted at the master
/// seed; `tag` names the branch and `index` the position within it.
#[inline]
pub fn derive(seed: u64, tag: u64, index: u64) -> u64 {
    prf2(seed ^ 0x5851_f42d_4c95_7f2d, tag, index)
}

/// Uniform double in `[0, 1)` from a PRF output.
#[inline]
pub fn unit_f64(x: u64) -> f64 {
    (x >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
}

// Branch tags.
pub(crate) const TAG_EDGE_LEVEL: u64 = 1;
pub(crate) const TAG_SKETCH_LEVEL: u64 = 2;
pub(crate) const TAG_SKETCH_ROW: u64 = 3;
pub(crate) const TAG_FINGERPRINT: u64 = 4;
pub(crate) const TAG_POOL_ALG1: u64 = 5;
pub(crate) const TAG_POOL_ALG2: u64 = 6;
pub(crate) const TAG_POOL_SPARE: u64 = 7;
pub(crate) const TAG_SWEEP: u64 = 8;
pub(crate) const TAG_TRIAL: u64 = 9;

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn deterministic_and_key_sensitive() {
        assert_eq!(prf(7, 42), prf(7, 42));
        assert_ne!(prf(7, 42), prf(8, 42));
        assert_ne!(prf(7, 42), prf(7, 43));
        assert_ne!(derive(1, TAG_POOL_ALG1, 0), derive(1, TAG_POOL_ALG2, 0));
    }

    #[test]
    fn unit_interval() {
        for i in 0..1000 {
            let u = unit_f64(prf(3, i));
            assert!((0.0..1.0).contains(&u));
        }
        assert_eq!(unit_f64(0), 0.0);
        assert!(unit_f64(u64::MAX) < 1.0);
    }

    #[test]
    fn bits_are_balanced() {
        let mut ones = [0u32; 64];
        let trials = 20_000u64;
        for i in 0..trials {
            let x = prf(0xfeed, i);
            for (b, c) in ones.iter_mut().enumerate() {
                *c += ((x >> b) & 1) as u32;
            }
        }
        // 5 sigma of Binomial(20000, 1/2) is ~354
        for c in ones {
            assert!((c as i64 - 10_000).abs() < 360, "bit count {c}");
        }
    }
}
