use crate::model::{MajorityVote, ModelError, SampleSet};
use crate::rng::{self, label};

use super::{boost, BoostConfig, BoostError, BoostOutcome, WeakLearner};

#[derive(Clone, Debug)]
pub struct BaggedOutcome {
    /// Unweighted majority over the signs of the surviving inner votes.
    pub majority: MajorityVote,
    /// Inner runs that finished, in bag order.
    pub inner: Vec<BoostOutcome>,
    /// `(bag index, error)` of every dropped bag.
    pub failed: Vec<(usize, BoostError)>,
}

/// `bags` bootstrap bags of `bag_size` draws each from `sample.draws()`.
pub fn draw_bags(sample: &SampleSet, bags: usize, bag_size: usize, seed: u64) -> Result<Vec<SampleSet>, ModelError> {
    let mut rng = rng::stream(seed, &[label::BAGS]);
    (0..bags).map(|_| sample.bootstrap(bag_size, &mut rng)).collect()
}

/// Boosts each bag against the same learner and takes the majority of the
/// inner majorities. A bag whose run fails is dropped and recorded.
pub fn run_bags<W: WeakLearner + ?Sized>(
    bags: &[SampleSet],
    learner: &mut W,
    cfg: &BoostConfig,
) -> Result<BaggedOutcome, BoostError> {
    let universe = bags
        .first()
        .ok_or_else(|| BoostError::InvalidConfig("at least one bag required".into()))?
        .universe();
    let mut inner = Vec::with_capacity(bags.len());
    let mut failed = Vec::new();
    for (b, bag) in bags.iter().enumerate() {
        match boost(bag, learner, cfg) {
            Ok(out) => inner.push(out),
            Err(e) => failed.push((b, e)),
        }
    }
    if inner.is_empty() {
        return Err(BoostError::AllBagsFailed(bags.len()));
    }
    let majority = MajorityVote::new(universe, inner.iter().map(|o| o.classifier.clone()).collect())?;
    Ok(BaggedOutcome { majority, inner, failed })
}

/// Bootstrap-bagged boosting: `bags` bags of `bag_size` draws with
/// replacement from the sample, boosted one after the other.
pub fn bagged_majority<W: WeakLearner + ?Sized>(
    sample: &SampleSet,
    learner: &mut W,
    cfg: &BoostConfig,
    bags: usize,
    bag_size: usize,
    seed: u64,
) -> Result<BaggedOutcome, BoostError> {
    if bags == 0 {
        return Err(BoostError::InvalidConfig("bags must be >= 1".into()));
    }
    if bag_size == 0 || bag_size > sample.m() {
        return Err(BoostError::InvalidConfig(format!("bag_size must lie in [1, m = {}], got {bag_size}", sample.m())));
    }
    let drawn = draw_bags(sample, bags, bag_size, seed)?;
    run_bags(&drawn, learner, cfg)
}
