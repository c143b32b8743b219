//! Seed plumbing shared by every stochastic component.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Derives an independent child seed from a parent seed and a stream id.
///
/// SplitMix64 finaliser over the pair; child streams never depend on the order in
/// which workers are scheduled.
pub fn child_seed(seed: u64, stream: u64) -> u64 {
    let mut z = seed
        .wrapping_add(0x9E37_79B9_7F4A_7C15)
        .wrapping_add(stream.wrapping_mul(0xD1B5_4A32_D192_ED03));
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

pub fn rng_from_seed(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn child_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    rng_from_seed(child_seed(seed, stream))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn child_seeds_differ_per_stream() {
        let a = child_seed(7, 0);
        let b = child_seed(7, 1);
        assert_ne!(a, b);
        assert_eq!(a, child_seed(7, 0));
    }
}
