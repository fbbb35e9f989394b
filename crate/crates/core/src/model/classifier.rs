use super::hypothesis::{flip_unless_set, word_mask};
use super::{Hypothesis, ModelError, Universe};

/// Tolerance on `sum(weights) == 1`.
pub const WEIGHT_TOLERANCE: f64 = 1e-12;

/// Anything that votes on every point of a finite universe.
///
/// The prediction at `p` is `+1` when `margin(p) >= 0`: a zero vote is a
/// correct prediction under the all-ones concept.
pub trait Classifier {
    fn universe(&self) -> Universe;

    /// Signed vote at point `p`.
    fn margin(&self, p: usize) -> Result<f64, ModelError>;

    /// Fraction of the universe predicted `-1`.
    fn exact_error(&self) -> f64;

    fn predicts_minus(&self, p: usize) -> Result<bool, ModelError> {
        Ok(self.margin(p)? < 0.0)
    }
}

/// `sign(sum_t w_t h_t)` with nonnegative weights summing to one.
#[derive(Clone, Debug, PartialEq)]
pub struct VotingClassifier {
    universe: Universe,
    terms: Vec<(f64, Hypothesis)>,
}

impl VotingClassifier {
    pub fn new(universe: Universe, terms: Vec<(f64, Hypothesis)>) -> Result<Self, ModelError> {
        if terms.is_empty() {
            return Err(ModelError::InvalidWeights("no terms".into()));
        }
        if let Some((w, _)) = terms.iter().find(|(w, _)| !(*w >= 0.0 && w.is_finite())) {
            return Err(ModelError::InvalidWeights(format!("weight {w} is negative or not finite")));
        }
        let total: f64 = terms.iter().map(|(w, _)| w).sum();
        if (total - 1.0).abs() > WEIGHT_TOLERANCE {
            return Err(ModelError::InvalidWeights(format!("weights sum to {total}")));
        }
        Ok(Self { universe, terms })
    }

    /// Normalizes raw nonnegative weights and merges repeated hypotheses,
    /// keeping first-appearance order.
    pub fn from_raw(universe: Universe, raw: Vec<(f64, Hypothesis)>) -> Result<Self, ModelError> {
        let total: f64 = raw.iter().map(|(w, _)| w).sum();
        if !(total > 0.0 && total.is_finite()) {
            return Err(ModelError::InvalidWeights(format!("raw weights sum to {total}")));
        }
        let mut merged: Vec<(f64, Hypothesis)> = Vec::with_capacity(raw.len());
        let mut index = std::collections::HashMap::new();
        for (w, h) in raw {
            match index.get(&h) {
                Some(&j) => {
                    let slot: &mut (f64, Hypothesis) = &mut merged[j];
                    slot.0 += w;
                }
                None => {
                    index.insert(h.clone(), merged.len());
                    merged.push((w, h));
                }
            }
        }
        for term in &mut merged {
            term.0 /= total;
        }
        Self::new(universe, merged)
    }

    pub fn single(universe: Universe, h: Hypothesis) -> Self {
        Self { universe, terms: vec![(1.0, h)] }
    }

    pub fn terms(&self) -> &[(f64, Hypothesis)] {
        &self.terms
    }

    /// Total weight on terms equal to `h`.
    pub fn weight_on(&self, h: &Hypothesis) -> f64 {
        self.terms.iter().filter(|(_, t)| t == h).map(|(w, _)| w).sum()
    }

    /// Total weight on the near-all-ones hypothesis.
    pub fn weight_on_near_all_ones(&self) -> f64 {
        self.terms.iter().filter(|(_, t)| t.is_near_all_ones()).map(|(w, _)| w).sum()
    }

    /// Point-at-a-time reference for [`Classifier::exact_error`].
    pub fn exact_error_naive(&self) -> f64 {
        let u = self.universe.size();
        let errors = (0..u).filter(|&p| self.margin_unchecked(p) < 0.0).count();
        errors as f64 / u as f64
    }

    fn margin_unchecked(&self, p: usize) -> f64 {
        let u = self.universe.size();
        let mut s = 0.0;
        for (w, h) in &self.terms {
            s += w * f64::from(h.sign(u, p));
        }
        s
    }

    /// Votes for the 64 points of word `chunk`, summed in term order (the
    /// same order as the naive loop, so results agree bit for bit).
    fn chunk_votes(&self, chunk: usize, acc: &mut [f64; 64]) {
        let u = self.universe.size();
        acc.fill(0.0);
        for (w, h) in &self.terms {
            let bits = h.word(u, chunk);
            for (lane, slot) in acc.iter_mut().enumerate() {
                *slot += flip_unless_set(*w, bits, lane);
            }
        }
    }

    /// Margins at every point of the universe.
    pub fn margins(&self) -> Vec<f64> {
        let u = self.universe.size();
        let mut out = Vec::with_capacity(u);
        let mut acc = [0.0f64; 64];
        for chunk in 0..u.div_ceil(64) {
            self.chunk_votes(chunk, &mut acc);
            let n = (u - chunk * 64).min(64);
            out.extend_from_slice(&acc[..n]);
        }
        out
    }

    /// Bits of the points predicted `-1` in word `chunk`.
    fn chunk_minus_bits(&self, chunk: usize, acc: &mut [f64; 64]) -> u64 {
        self.chunk_votes(chunk, acc);
        let mut minus = 0u64;
        for (lane, &v) in acc.iter().enumerate() {
            minus |= u64::from(v < 0.0) << lane;
        }
        minus & word_mask(self.universe.size(), chunk)
    }
}

impl Classifier for VotingClassifier {
    fn universe(&self) -> Universe {
        self.universe
    }

    fn margin(&self, p: usize) -> Result<f64, ModelError> {
        self.universe.check(p)?;
        Ok(self.margin_unchecked(p))
    }

    fn exact_error(&self) -> f64 {
        let u = self.universe.size();
        let mut acc = [0.0f64; 64];
        let errors: u64 = (0..u.div_ceil(64))
            .map(|c| u64::from(self.chunk_minus_bits(c, &mut acc).count_ones()))
            .sum();
        errors as f64 / u as f64
    }
}

/// Unweighted majority over the signs of several voting classifiers.
#[derive(Clone, Debug, PartialEq)]
pub struct MajorityVote {
    universe: Universe,
    inner: Vec<VotingClassifier>,
}

impl MajorityVote {
    pub fn new(universe: Universe, inner: Vec<VotingClassifier>) -> Result<Self, ModelError> {
        if inner.is_empty() {
            return Err(ModelError::InvalidWeights("majority over zero classifiers".into()));
        }
        if inner.iter().any(|f| f.universe() != universe) {
            return Err(ModelError::InvalidWeights("inner classifiers over another universe".into()));
        }
        Ok(Self { universe, inner })
    }

    pub fn inner(&self) -> &[VotingClassifier] {
        &self.inner
    }

    /// Mean near-all-ones weight across the inner classifiers.
    pub fn weight_on_near_all_ones(&self) -> f64 {
        self.inner.iter().map(|f| f.weight_on_near_all_ones()).sum::<f64>() / self.inner.len() as f64
    }
}

impl Classifier for MajorityVote {
    fn universe(&self) -> Universe {
        self.universe
    }

    fn margin(&self, p: usize) -> Result<f64, ModelError> {
        self.universe.check(p)?;
        let b = self.inner.len() as f64;
        let mut s = 0.0;
        for f in &self.inner {
            s += if f.margin_unchecked(p) < 0.0 { -1.0 } else { 1.0 } / b;
        }
        Ok(s)
    }

    fn exact_error(&self) -> f64 {
        let u = self.universe.size();
        let b = self.inner.len() as u32;
        let mut acc = [0.0f64; 64];
        let mut errors = 0u64;
        for chunk in 0..u.div_ceil(64) {
            let mut minus_votes = [0u32; 64];
            for f in &self.inner {
                let bits = f.chunk_minus_bits(chunk, &mut acc);
                for (lane, v) in minus_votes.iter_mut().enumerate() {
                    *v += ((bits >> lane) & 1) as u32;
                }
            }
            let n = (u - chunk * 64).min(64);
            // outer margin (plus - minus)/b < 0  <=>  2 * minus > b
            errors += minus_votes[..n].iter().filter(|&&v| 2 * v > b).count() as u64;
        }
        errors as f64 / u as f64
    }
}
