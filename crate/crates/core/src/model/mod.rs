//! Finite-universe domain model.
//!
//! The universe is `[u]`, the data distribution is uniform over it and the
//! concept is the all-ones labelling, so the generalization error of any
//! voting classifier is the exact fraction of points it votes `-1` on.

mod classifier;
mod hypothesis;
mod kernel;
mod sample;

pub use classifier::{Classifier, MajorityVote, VotingClassifier, WEIGHT_TOLERANCE};
pub(crate) use hypothesis::flip_unless_set;
pub use hypothesis::{Hypothesis, PackedSigns, SignVector};
pub use sample::{advantage, advantage_packed, draw_sample, SampleDistribution, SampleSet, MASS_TOLERANCE};

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ModelError {
    #[error("universe must contain at least one point")]
    EmptyUniverse,
    #[error("sample must contain at least one draw")]
    EmptySample,
    #[error("point {point} outside universe of size {universe}")]
    PointOutOfRange { point: usize, universe: usize },
    #[error("sign {0} is not -1 or +1")]
    InvalidSign(i8),
    #[error("invalid distribution: {0}")]
    InvalidDistribution(String),
    #[error("invalid classifier weights: {0}")]
    InvalidWeights(String),
}

/// The universe `{1, ..., u}`, addressed 0-based as points `0 .. u`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Universe {
    size: usize,
}

impl Universe {
    pub fn new(size: usize) -> Result<Self, ModelError> {
        if size == 0 {
            return Err(ModelError::EmptyUniverse);
        }
        Ok(Self { size })
    }

    pub fn size(self) -> usize {
        self.size
    }

    pub fn check(self, p: usize) -> Result<(), ModelError> {
        if p < self.size {
            Ok(())
        } else {
            Err(ModelError::PointOutOfRange { point: p, universe: self.size })
        }
    }
}
