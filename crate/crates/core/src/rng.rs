//! Counter-based randomness.
//!
//! Everything random in the crate is a pure function of a seed and a set of
//! integer coordinates. Hypothesis bits come from [`counter_word`], keyed by
//! `(stream seed, hypothesis index, word index)`, so a hypothesis never has to
//! be stored: any 64-point word of it can be regenerated on demand and in any
//! order. Sequential streams (sample draws, bootstrap bags, Monte-Carlo
//! trials) use ChaCha8 seeded through [`split_seed`].

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

const GOLDEN: u64 = 0x9E37_79B9_7F4A_7C15;

/// SplitMix64 finalizer.
#[inline]
pub fn mix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// The 64 random bits at `(key, stream, counter)`.
#[inline]
pub fn counter_word(key: u64, stream: u64, counter: u64) -> u64 {
    let a = mix64(key.wrapping_add(GOLDEN));
    let b = mix64(a ^ stream.wrapping_mul(GOLDEN).wrapping_add(0x632B_E59B_D9B4_E019));
    mix64(b ^ counter.wrapping_add(0xD6E8_FEB8_6659_FD93))
}

/// Derives a child seed from `parent` and a path of labels.
///
/// Distinct label paths give statistically independent children; the same path
/// always gives the same child.
pub fn split_seed(parent: u64, labels: &[u64]) -> u64 {
    labels
        .iter()
        .fold(mix64(parent ^ 0xA076_1D64_78BD_642F), |acc, &l| {
            mix64(acc ^ mix64(l.wrapping_add(GOLDEN)))
        })
}

/// A sequential generator for the stream named by `labels` under `seed`.
pub fn stream(seed: u64, labels: &[u64]) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(split_seed(seed, labels))
}

/// Stable numeric labels for the streams the crate draws from.
pub mod label {
    pub const SAMPLE: u64 = 1;
    pub const HYPOTHESES: u64 = 2;
    pub const BAGS: u64 = 3;
    pub const TRIAL: u64 = 4;
    pub const H1: u64 = 11;
    pub const H2: u64 = 12;
    pub const MONTE_CARLO: u64 = 21;
    pub const BIAS: u64 = 31;
    pub const COUPON: u64 = 32;
    pub const LINEAR_COMB: u64 = 33;
    pub const ANTICONCENTRATION: u64 = 34;
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn counter_word_is_pure() {
        assert_eq!(counter_word(7, 3, 9), counter_word(7, 3, 9));
        assert_ne!(counter_word(7, 3, 9), counter_word(7, 3, 10));
        assert_ne!(counter_word(7, 3, 9), counter_word(7, 4, 9));
        assert_ne!(counter_word(7, 3, 9), counter_word(8, 3, 9));
    }

    #[test]
    fn split_seed_depends_on_path() {
        let s = split_seed(42, &[1, 2]);
        assert_eq!(s, split_seed(42, &[1, 2]));
        assert_ne!(s, split_seed(42, &[2, 1]));
        assert_ne!(s, split_seed(42, &[1]));
        assert_ne!(s, split_seed(43, &[1, 2]));
    }

    #[test]
    fn counter_words_look_balanced() {
        // 4096 words -> 262144 bits; a fair source lands within ~5 sigma of half.
        let ones: u32 = (0..4096).map(|c| counter_word(1, 2, c).count_ones()).sum();
        let n = 4096.0 * 64.0;
        let z = (ones as f64 - n / 2.0) / (n / 4.0f64).sqrt();
        assert!(z.abs() < 5.0, "z = {z}");
    }
}
