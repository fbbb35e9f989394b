//! The adversarial weak learner.
//!
//! Two families of random hypothesis blocks back two selectors. `g` serves
//! `h0` while the distribution leans on the first part of the universe and
//! otherwise a random hypothesis that, besides clearing the advantage
//! threshold on the sample, is `-1` on a quota of the first unsampled
//! first-part points `F_{r,S}`. `t` serves any hypothesis clearing the
//! threshold. The switch rule prefers `g`. The majority voter certifies that
//! the blocks can keep serving hypotheses.

mod certify;
mod params;
mod select;
mod sets;

pub use certify::{
    certifier_rate, majority_voter_certify, Certificate, CertificateSummary, CertifyOutcome, GUARANTEE_TOLERANCE,
    POTENTIAL_TOLERANCE,
};
pub use params::{derive_params, AdversaryParams, CalibrationConstants, DEFAULT_ALPHA, DEFAULT_BLOCK_BUDGET};
pub use select::{
    g_select, t_select, weak_learn, AdversarialWeakLearner, LearnerMode, LearnerStats, ScanStats, Scanner, Selection,
    Via, DEFAULT_CACHE_BYTES,
};
pub use sets::{compute_frs, frs_from_support, FrsOutcome, HypId, HypothesisSets, SetId};

use thiserror::Error;

use crate::model::ModelError;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum AdversaryError {
    #[error("invalid parameters: {0}")]
    InvalidParams(String),
    #[error("adversary exhausted: no hypothesis clears the threshold on a support of {support} points")]
    Exhausted { support: usize },
    #[error("weak-learner contract violated: advantage {advantage} below {threshold}")]
    ContractViolated { advantage: f64, threshold: f64 },
    #[error(transparent)]
    Model(#[from] ModelError),
}
