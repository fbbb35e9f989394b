use std::sync::Arc;

use crate::rng::counter_word;

use super::ModelError;

/// Mask with the low `n` bits set (`n <= 64`).
#[inline]
pub(crate) fn low_mask(n: usize) -> u64 {
    if n >= 64 {
        u64::MAX
    } else {
        (1u64 << n) - 1
    }
}

/// Valid-point mask for word `w` of a universe of `u` points.
#[inline]
pub(crate) fn word_mask(u: usize, w: usize) -> u64 {
    let start = w * 64;
    if start >= u {
        0
    } else {
        low_mask(u - start)
    }
}

/// An explicit, bit-packed sign vector. Bit `p` set means `+1` at point `p`.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct SignVector {
    len: usize,
    words: Vec<u64>,
}

impl SignVector {
    pub fn from_signs(signs: &[i8]) -> Result<Self, ModelError> {
        let mut words = vec![0u64; signs.len().div_ceil(64)];
        for (p, &s) in signs.iter().enumerate() {
            match s {
                1 => words[p / 64] |= 1 << (p % 64),
                -1 => {}
                other => return Err(ModelError::InvalidSign(other)),
            }
        }
        Ok(Self { len: signs.len(), words })
    }

    pub fn from_words(len: usize, mut words: Vec<u64>) -> Self {
        words.resize(len.div_ceil(64), 0);
        if let Some(last) = words.last_mut() {
            *last &= word_mask(len, len.div_ceil(64) - 1);
        }
        Self { len, words }
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn words(&self) -> &[u64] {
        &self.words
    }

    pub fn get(&self, p: usize) -> i8 {
        assert!(p < self.len, "point {p} outside sign vector of length {}", self.len);
        if (self.words[p / 64] >> (p % 64)) & 1 == 1 {
            1
        } else {
            -1
        }
    }

    pub fn count_minus(&self) -> usize {
        self.len - self.words.iter().map(|w| w.count_ones() as usize).sum::<usize>()
    }

    pub fn to_signs(&self) -> Vec<i8> {
        (0..self.len).map(|p| self.get(p)).collect()
    }
}

/// A hypothesis `[u] -> {-1, +1}`.
///
/// Points are 0-based here: point `p` is element `p + 1` of the universe
/// `{1, ..., u}`. The universe size is supplied at evaluation time so the
/// structural and lazy forms cost nothing to hold.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum Hypothesis {
    /// `+1` everywhere; the target concept.
    AllOnes,
    /// `+1` on the first `u - r1` points and `-1` on the last `r1`.
    NearAllOnes { r1: usize },
    /// I.i.d. uniform signs regenerated from `(seed, index)`.
    Lazy { seed: u64, index: u64 },
    Explicit(Arc<SignVector>),
}

impl Hypothesis {
    pub fn all_ones() -> Self {
        Hypothesis::AllOnes
    }

    pub fn near_all_ones(r1: usize) -> Self {
        Hypothesis::NearAllOnes { r1 }
    }

    pub fn lazy(seed: u64, index: u64) -> Self {
        Hypothesis::Lazy { seed, index }
    }

    pub fn explicit(signs: &[i8]) -> Result<Self, ModelError> {
        Ok(Hypothesis::Explicit(Arc::new(SignVector::from_signs(signs)?)))
    }

    pub fn is_near_all_ones(&self) -> bool {
        matches!(self, Hypothesis::NearAllOnes { .. })
    }

    /// Bits of the 64 points `64w .. 64w + 64`, bit `j` set iff point `64w + j`
    /// is `+1`. Bits past the end of the universe are zero.
    #[inline]
    pub fn word(&self, u: usize, w: usize) -> u64 {
        let mask = word_mask(u, w);
        match self {
            Hypothesis::AllOnes => mask,
            Hypothesis::NearAllOnes { r1 } => {
                let boundary = u.saturating_sub(*r1);
                let start = w * 64;
                if boundary <= start {
                    0
                } else {
                    low_mask(boundary - start) & mask
                }
            }
            Hypothesis::Lazy { seed, index } => counter_word(*seed, *index, w as u64) & mask,
            Hypothesis::Explicit(v) => {
                debug_assert_eq!(v.len(), u, "explicit hypothesis evaluated on another universe");
                v.words().get(w).copied().unwrap_or(0) & mask
            }
        }
    }

    /// The sign at point `p`.
    #[inline]
    pub fn sign(&self, u: usize, p: usize) -> i8 {
        debug_assert!(p < u);
        if (self.word(u, p / 64) >> (p % 64)) & 1 == 1 {
            1
        } else {
            -1
        }
    }

    /// Full bit-packed form over a universe of `u` points.
    pub fn materialize(&self, u: usize) -> SignVector {
        let words = (0..u.div_ceil(64)).map(|w| self.word(u, w)).collect();
        SignVector::from_words(u, words)
    }

    /// Signs restricted to `points` (ascending), packed in the order given.
    pub fn signs_on(&self, u: usize, points: &[usize]) -> PackedSigns {
        let mut words = vec![0u64; points.len().div_ceil(64)];
        let mut current = usize::MAX;
        let mut bits = 0u64;
        for (j, &p) in points.iter().enumerate() {
            let w = p / 64;
            if w != current {
                current = w;
                bits = self.word(u, w);
            }
            words[j / 64] |= ((bits >> (p % 64)) & 1) << (j % 64);
        }
        PackedSigns { len: points.len(), words }
    }

    /// Number of `-1` entries among `points`.
    pub fn count_minus_on(&self, u: usize, points: &[usize]) -> usize {
        let mut current = usize::MAX;
        let mut bits = 0u64;
        let mut minus = 0;
        for &p in points {
            let w = p / 64;
            if w != current {
                current = w;
                bits = self.word(u, w);
            }
            minus += ((!bits >> (p % 64)) & 1) as usize;
        }
        minus
    }
}

/// A hypothesis restricted to an ordered list of points.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PackedSigns {
    len: usize,
    words: Vec<u64>,
}

impl PackedSigns {
    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    #[inline]
    /// Bit `j % 64` of word `j / 64` is set iff entry `j` is `+1`.
    pub fn words(&self) -> &[u64] {
        &self.words
    }

    pub fn get(&self, j: usize) -> i8 {
        if (self.words[j / 64] >> (j % 64)) & 1 == 1 {
            1
        } else {
            -1
        }
    }

    pub fn count_plus(&self) -> usize {
        self.words.iter().map(|w| w.count_ones() as usize).sum()
    }

    /// `sum_j weights[j] * sign[j]`, accumulated left to right.
    ///
    /// This is the reference order: it matches a naive per-point loop bit for
    /// bit, and every contract decision is made on this value.
    pub fn signed_sum(&self, weights: &[f64]) -> f64 {
        assert_eq!(weights.len(), self.len);
        let mut acc = 0.0;
        for (c, chunk) in weights.chunks(64).enumerate() {
            let bits = self.words[c];
            for (lane, &x) in chunk.iter().enumerate() {
                acc += flip_unless_set(x, bits, lane);
            }
        }
        acc
    }

    /// `sum_{j : sign[j] = +1} weights[j]`, vectorized where the CPU allows.
    ///
    /// Summation order is unspecified; the result is within
    /// `len * 2^-52 * sum |w|` of the sequential sum.
    pub fn plus_mass(&self, weights: &[f64]) -> f64 {
        assert_eq!(weights.len(), self.len);
        super::kernel::plus_mass(&self.words, weights)
    }

    /// [`plus_mass`](Self::plus_mass) of several sign vectors of equal length.
    pub fn plus_mass_many(signs: &[&PackedSigns], weights: &[f64], out: &mut [f64]) {
        assert!(signs.iter().all(|s| s.len == weights.len()));
        let words: Vec<&[u64]> = signs.iter().map(|s| s.words.as_slice()).collect();
        super::kernel::plus_mass_many(&words, weights, out);
    }

    /// Single-precision [`plus_mass_many`](Self::plus_mass_many) for screening
    /// candidates; each result is within
    /// [`screen_error_f32`](Self::screen_error_f32) of the exact sum when the
    /// weights sum to at most one.
    pub fn plus_mass_many_f32(signs: &[&PackedSigns], weights: &[f32], out: &mut [f64]) {
        assert!(signs.iter().all(|s| s.len == weights.len()));
        let words: Vec<&[u64]> = signs.iter().map(|s| s.words.as_slice()).collect();
        super::kernel::plus_mass_many_f32(&words, weights, out);
    }

    pub fn screen_error_f32(len: usize) -> f64 {
        super::kernel::f32_screen_error(len)
    }

    /// [`signed_sum`](Self::signed_sum) up to rounding, given
    /// `total = sum weights`.
    pub fn signed_sum_fast(&self, weights: &[f64], total: f64) -> f64 {
        2.0 * self.plus_mass(weights) - total
    }
}

/// `x` if bit `lane` of `bits` is set, else `-x`; exact (flips the sign bit).
#[inline(always)]
pub(crate) fn flip_unless_set(x: f64, bits: u64, lane: usize) -> f64 {
    f64::from_bits(x.to_bits() ^ (((!bits >> lane) & 1) << 63))
}
