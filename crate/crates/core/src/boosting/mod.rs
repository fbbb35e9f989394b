//! Boosting over an abstract weak learner: AdaBoost, the margin variant
//! AdaBoost*_nu, and a bootstrap majority of AdaBoost majorities.

mod adaboost;
mod bagging;

pub use adaboost::{adaboost, adaboost_margin_nu, boost, error_weight, nu_correction, Booster, BoostOutcome, RoundRecord};
pub use bagging::{bagged_majority, draw_bags, run_bags, BaggedOutcome};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::{Hypothesis, ModelError, SampleDistribution};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum WeakLearnerError {
    #[error("{0}")]
    Exhausted(String),
    #[error("{0}")]
    Other(String),
}

/// Returns a hypothesis for any distribution over the sample.
///
/// Implementations must be deterministic given their own state and the
/// distribution.
pub trait WeakLearner {
    fn learn(&mut self, dist: &SampleDistribution) -> Result<Hypothesis, WeakLearnerError>;
}

impl<F> WeakLearner for F
where
    F: FnMut(&SampleDistribution) -> Result<Hypothesis, WeakLearnerError>,
{
    fn learn(&mut self, dist: &SampleDistribution) -> Result<Hypothesis, WeakLearnerError> {
        self(dist)
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum BoostError {
    #[error("invalid boosting config: {0}")]
    InvalidConfig(String),
    #[error("weak learner failed in round {round}: {source}")]
    Learner { round: usize, source: WeakLearnerError },
    #[error("weak learner broken in round {round}: edge {edge} below contract {contract}")]
    WeakLearnerBroken { round: usize, edge: f64, contract: f64 },
    #[error("training errors {errors} exceed the exponential-loss bound {bound} after round {round}")]
    ContractionViolated { round: usize, errors: usize, bound: f64 },
    #[error("distribution degenerated in round {round}: {source}")]
    Distribution { round: usize, source: ModelError },
    #[error("every round received zero weight")]
    AllWeightsZero,
    #[error("every bag failed ({0} bags)")]
    AllBagsFailed(usize),
    #[error(transparent)]
    Model(#[from] ModelError),
}

impl BoostError {
    /// Whether the failure came from the weak learner running out of
    /// hypotheses.
    pub fn is_exhausted(&self) -> bool {
        matches!(self, BoostError::Learner { source: WeakLearnerError::Exhausted(_), .. })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub enum Variant {
    Plain,
    /// AdaBoost*_nu with target margin `nu`.
    MarginNu { nu: f64 },
}

pub const DEFAULT_EDGE_FLOOR: f64 = 1e-9;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoostConfig {
    pub rounds: usize,
    /// Clamp for the weighted error: `eps` is kept in `[floor, 1/2 - floor]`.
    pub edge_floor: f64,
    pub variant: Variant,
    /// Minimum edge `sum D h` the weak learner promises; a smaller edge is a
    /// broken contract. `None` disables the check.
    pub contract: Option<f64>,
}

impl BoostConfig {
    pub fn new(rounds: usize) -> Self {
        Self { rounds, edge_floor: DEFAULT_EDGE_FLOOR, variant: Variant::Plain, contract: None }
    }

    pub fn with_contract(mut self, min_edge: f64) -> Self {
        self.contract = Some(min_edge);
        self
    }

    pub fn with_variant(mut self, variant: Variant) -> Self {
        self.variant = variant;
        self
    }

    pub fn validate(&self) -> Result<(), BoostError> {
        if self.rounds == 0 {
            return Err(BoostError::InvalidConfig("rounds must be >= 1".into()));
        }
        if !(self.edge_floor > 0.0 && self.edge_floor <= 1e-3) {
            return Err(BoostError::InvalidConfig(format!("edge_floor must lie in (0, 1e-3], got {}", self.edge_floor)));
        }
        if let Variant::MarginNu { nu } = self.variant {
            if !(0.0..1.0).contains(&nu) {
                return Err(BoostError::InvalidConfig(format!("nu must lie in [0, 1), got {nu}")));
            }
        }
        Ok(())
    }
}

/// `ceil(ln(m) / (2 gamma^2)) + 1`: enough rounds for zero training error
/// under a `2 gamma` edge.
pub fn default_rounds(m: usize, gamma: f64) -> usize {
    crate::ceil_tol((m as f64).ln() / (2.0 * gamma * gamma)) + 1
}

/// `ceil(log2(m / delta))`.
pub fn default_bags(m: usize, delta: f64) -> usize {
    crate::ceil_tol((m as f64 / delta).log2()).max(1)
}
