//! Deterministic stateless hashing used throughout the crate.
//!
//! Everything that needs "random" bits without storing state derives them
//! from one fixed construction: FNV-1a over the input bytes followed by a
//! SplitMix64 finalizer, with the seed folded in before finalization. The
//! choice is part of the crate's reproducibility contract; projections are
//! only comparable across machines and versions because this function never
//! changes.

const FNV_OFFSET: u64 = 0xcbf2_9ce4_8422_2325;
const FNV_PRIME: u64 = 0x0000_0100_0000_01b3;
const GAMMA: u64 = 0x9e37_79b9_7f4a_7c15;

/// SplitMix64 finalizer: a cheap, well-diffusing 64-bit mixer.
#[inline]
pub fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(GAMMA);
    let mut z = x;
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Seeded stateless hash of a byte string (FNV-1a + SplitMix64).
#[inline]
pub fn stable_hash64(seed: u64, bytes: &[u8]) -> u64 {
    let mut h = FNV_OFFSET;
    for b in bytes {
        h ^= u64::from(*b);
        h = h.wrapping_mul(FNV_PRIME);
    }
    splitmix64(seed ^ h)
}

/// Derives an independent 64-bit value from two inputs.
///
/// Used to fan a single user-facing seed out into per-item RNG streams
/// (per example, per word, per run) so results never depend on iteration
/// or scheduling order.
#[inline]
pub fn mix64(a: u64, b: u64) -> u64 {
    splitmix64(splitmix64(a).wrapping_add(splitmix64(b ^ GAMMA)))
}

/// Three-way variant of [`mix64`].
#[inline]
pub fn mix64_3(a: u64, b: u64, c: u64) -> u64 {
    mix64(mix64(a, b), c)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn stable_across_calls() {
        assert_eq!(stable_hash64(42, b"hello"), stable_hash64(42, b"hello"));
        assert_eq!(mix64(1, 2), mix64(1, 2));
    }

    #[test]
    fn seed_changes_output() {
        assert_ne!(stable_hash64(1, b"hello"), stable_hash64(2, b"hello"));
    }

    #[test]
    fn input_changes_output() {
        assert_ne!(stable_hash64(1, b"hello"), stable_hash64(1, b"hellp"));
        assert_ne!(mix64(1, 2), mix64(2, 1));
    }

    #[test]
    fn pinned_reference_values() {
        // Frozen so an accidental change to the construction is caught:
        // stored projections would silently stop matching otherwise.
        assert_eq!(stable_hash64(0, b""), splitmix64(FNV_OFFSET));
        assert_eq!(splitmix64(0), 0xe220_a839_7b1d_cdaf);
    }
}
