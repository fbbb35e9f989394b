use serde::{Deserialize, Serialize};

use crate::model::{Hypothesis, SampleSet};
use crate::rng::{self, label};

use super::{AdversaryError, AdversaryParams};

/// Which of the two hypothesis families.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum SetId {
    /// Scanned by the adversarial selector.
    H1,
    /// Scanned by the fallback selector.
    H2,
}

/// Position of a hypothesis in scan order. `index == 0` is `h0`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct HypId {
    pub block: usize,
    pub index: usize,
}

#[derive(Clone, Debug)]
enum Source {
    Lazy { h1_seed: u64, h2_seed: u64, k: usize, budget: usize },
    Explicit { h1: Vec<Vec<Hypothesis>>, h2: Vec<Vec<Hypothesis>> },
}

/// The two families of `k` blocks each. Block entry 0 is `h0`; the others
/// are i.i.d. uniform sign vectors regenerated on demand from disjoint seed
/// streams, or explicit vectors in test fixtures.
#[derive(Clone, Debug)]
pub struct HypothesisSets {
    master_seed: u64,
    r1: usize,
    source: Source,
}

impl HypothesisSets {
    pub fn new(master_seed: u64, params: &AdversaryParams) -> Self {
        Self::lazy(master_seed, params.k, params.per_block_budget, params.r1)
    }

    pub fn lazy(master_seed: u64, k: usize, budget: usize, r1: usize) -> Self {
        let h1_seed = rng::split_seed(master_seed, &[label::HYPOTHESES, label::H1]);
        let h2_seed = rng::split_seed(master_seed, &[label::HYPOTHESES, label::H2]);
        Self { master_seed, r1, source: Source::Lazy { h1_seed, h2_seed, k, budget } }
    }

    /// Fixture sets; each inner vector lists one block without `h0`.
    pub fn explicit(r1: usize, h1: Vec<Vec<Hypothesis>>, h2: Vec<Vec<Hypothesis>>) -> Self {
        Self { master_seed: 0, r1, source: Source::Explicit { h1, h2 } }
    }

    pub fn master_seed(&self) -> u64 {
        self.master_seed
    }

    pub fn h0(&self) -> Hypothesis {
        Hypothesis::near_all_ones(self.r1)
    }

    pub fn blocks(&self, set: SetId) -> usize {
        match &self.source {
            Source::Lazy { k, .. } => *k,
            Source::Explicit { h1, h2 } => match set {
                SetId::H1 => h1.len(),
                SetId::H2 => h2.len(),
            },
        }
    }

    /// Entries in `block`, counting `h0`.
    pub fn block_len(&self, set: SetId, block: usize) -> usize {
        match &self.source {
            Source::Lazy { budget, .. } => budget + 1,
            Source::Explicit { h1, h2 } => {
                1 + match set {
                    SetId::H1 => h1[block].len(),
                    SetId::H2 => h2[block].len(),
                }
            }
        }
    }

    /// Total number of distinct hypotheses held, `h0` counted once.
    pub fn total(&self) -> usize {
        let count = |set| (0..self.blocks(set)).map(|b| self.block_len(set, b) - 1).sum::<usize>();
        count(SetId::H1) + count(SetId::H2) + 1
    }

    pub fn get(&self, set: SetId, id: HypId) -> Hypothesis {
        if id.index == 0 {
            return self.h0();
        }
        match &self.source {
            Source::Lazy { h1_seed, h2_seed, budget, .. } => {
                let seed = match set {
                    SetId::H1 => *h1_seed,
                    SetId::H2 => *h2_seed,
                };
                Hypothesis::lazy(seed, (id.block * budget + id.index - 1) as u64)
            }
            Source::Explicit { h1, h2 } => match set {
                SetId::H1 => h1[id.block][id.index - 1].clone(),
                SetId::H2 => h2[id.block][id.index - 1].clone(),
            },
        }
    }

    /// Every id of `set` in scan order: block by block, `h0` first.
    pub fn ids(&self, set: SetId) -> impl Iterator<Item = HypId> + '_ {
        (0..self.blocks(set)).flat_map(move |block| (0..self.block_len(set, block)).map(move |index| HypId { block, index }))
    }
}

/// `F_{r,S}`: the first `r` unsampled points of the first part, or the
/// marker that fewer than `r` exist (the sample is outside `S_part1`).
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum FrsOutcome {
    Present(Vec<usize>),
    InsufficientUnsampled { available: usize },
}

impl FrsOutcome {
    pub fn points(&self) -> Option<&[usize]> {
        match self {
            FrsOutcome::Present(p) => Some(p),
            FrsOutcome::InsufficientUnsampled { .. } => None,
        }
    }
}

/// First `r` points of `[u - r1]` missing from the ascending `support`.
pub fn frs_from_support(support: &[usize], first_part_len: usize, r: usize) -> FrsOutcome {
    let mut out = Vec::with_capacity(r);
    let mut next = 0usize;
    for p in 0..first_part_len {
        if out.len() == r {
            break;
        }
        while next < support.len() && support[next] < p {
            next += 1;
        }
        if !(next < support.len() && support[next] == p) {
            out.push(p);
        }
    }
    if out.len() == r {
        FrsOutcome::Present(out)
    } else {
        FrsOutcome::InsufficientUnsampled { available: out.len() }
    }
}

pub fn compute_frs(sample: &SampleSet, params: &AdversaryParams) -> Result<FrsOutcome, AdversaryError> {
    if sample.universe().size() != params.u {
        return Err(AdversaryError::InvalidParams(format!(
            "sample over universe {} but params expect {}",
            sample.universe().size(),
            params.u
        )));
    }
    Ok(frs_from_support(sample.distinct(), params.first_part_len(), params.r))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::Universe;

    #[test]
    fn lazy_sets_are_disjoint_streams() {
        let sets = HypothesisSets::lazy(5, 3, 10, 4);
        let a = sets.get(SetId::H1, HypId { block: 1, index: 2 });
        let b = sets.get(SetId::H2, HypId { block: 1, index: 2 });
        assert_ne!(a, b);
        assert_eq!(sets.get(SetId::H1, HypId { block: 2, index: 0 }), Hypothesis::near_all_ones(4));
        assert_eq!(sets.total(), 2 * 3 * 10 + 1);
        assert_eq!(sets.ids(SetId::H2).count(), 3 * 11);
    }

    #[test]
    fn frs_of_full_sample_is_insufficient() {
        let u = Universe::new(100).unwrap();
        let s = SampleSet::whole(u);
        assert_eq!(frs_from_support(s.distinct(), 90, 5), FrsOutcome::InsufficientUnsampled { available: 0 });
    }

    #[test]
    fn frs_prefix_case() {
        let (u, r) = (60usize, 6usize);
        let draws: Vec<usize> = (r..u).collect();
        let s = SampleSet::from_draws(Universe::new(u).unwrap(), draws).unwrap();
        assert_eq!(frs_from_support(s.distinct(), 50, r), FrsOutcome::Present((0..r).collect()));
    }
}
