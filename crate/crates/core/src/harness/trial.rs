use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::adversary::{
    derive_params, AdversarialWeakLearner, AdversaryParams, CalibrationConstants, HypothesisSets, LearnerMode,
    LearnerStats, DEFAULT_ALPHA, DEFAULT_BLOCK_BUDGET,
};
use crate::boosting::{
    adaboost, adaboost_margin_nu, bagged_majority, default_bags, default_rounds, BoostConfig, BoostError, WeakLearner,
    WeakLearnerError,
};
use crate::model::{draw_sample, Classifier, SampleSet, Universe};
use crate::rng::{self, label};

use super::HarnessError;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Algorithm {
    AdaBoost,
    /// AdaBoost*_nu.
    AdaStar,
    /// Majority of AdaBoost runs on bootstrap bags.
    Bagged,
}

impl Algorithm {
    pub const ALL: [Algorithm; 3] = [Algorithm::AdaBoost, Algorithm::AdaStar, Algorithm::Bagged];

    pub fn name(self) -> &'static str {
        match self {
            Algorithm::AdaBoost => "adaboost",
            Algorithm::AdaStar => "adastar",
            Algorithm::Bagged => "bagged",
        }
    }
}

impl fmt::Display for Algorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Algorithm {
    type Err = HarnessError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Algorithm::ALL
            .into_iter()
            .find(|a| a.name() == s)
            .ok_or_else(|| HarnessError::Config(format!("unknown algorithm {s:?} (adaboost, adastar, bagged)")))
    }
}

/// Adversarial switch rule (`on`) or the fallback selector alone (`off`).
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Adversary {
    On,
    Off,
}

impl Adversary {
    pub fn name(self) -> &'static str {
        match self {
            Adversary::On => "on",
            Adversary::Off => "off",
        }
    }

    fn mode(self) -> LearnerMode {
        match self {
            Adversary::On => LearnerMode::Adversarial,
            Adversary::Off => LearnerMode::Control,
        }
    }
}

impl fmt::Display for Adversary {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Adversary {
    type Err = HarnessError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "on" => Ok(Adversary::On),
            "off" => Ok(Adversary::Off),
            _ => Err(HarnessError::Config(format!("adversary must be on or off, got {s:?}"))),
        }
    }
}

/// Everything a trial needs besides the algorithm, the adversary flag and
/// the seed.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrialConfig {
    pub gamma: f64,
    pub d: usize,
    pub m: usize,
    pub alpha: f64,
    pub per_block_budget: usize,
    /// Boosting rounds; `ceil(ln m / (2 gamma^2)) + 1` when absent.
    pub rounds: Option<usize>,
    /// `nu` of AdaBoost*_nu; `gamma` when absent.
    pub nu: Option<f64>,
    /// Bag count; `ceil(log2(4m))` when absent.
    pub bags: Option<usize>,
    pub constants: CalibrationConstants,
}

impl TrialConfig {
    pub fn new(gamma: f64, d: usize, m: usize) -> Self {
        Self {
            gamma,
            d,
            m,
            alpha: DEFAULT_ALPHA,
            per_block_budget: DEFAULT_BLOCK_BUDGET,
            rounds: None,
            nu: None,
            bags: None,
            constants: CalibrationConstants::default(),
        }
    }

    pub fn params(&self) -> Result<AdversaryParams, HarnessError> {
        Ok(derive_params(self.gamma, self.d, self.m, self.alpha, self.constants)?.with_budget(self.per_block_budget)?)
    }

    pub fn rounds(&self) -> usize {
        self.rounds.unwrap_or_else(|| default_rounds(self.m, self.gamma))
    }

    pub fn bags(&self) -> usize {
        self.bags.unwrap_or_else(|| default_bags(self.m, 0.25))
    }
}

/// One CSV record. Trial rows fill every column; aggregate rows leave
/// `seed` and `in_spart1` empty (see [`super::Aggregate`]).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrialRow {
    pub seed: Option<u64>,
    pub m: usize,
    pub u: usize,
    pub r: usize,
    pub r1: usize,
    pub gamma: f64,
    pub d: usize,
    pub alpha: f64,
    pub algo: Algorithm,
    pub adversary: Adversary,
    /// Empty when the trial failed.
    pub exact_error: Option<f64>,
    pub h0_weight: Option<f64>,
    pub in_spart1: Option<bool>,
    pub frs_minus_fraction: Option<f64>,
    pub rounds_used: usize,
    pub failure: Option<String>,
}

/// Column order of the CSV files.
pub const CSV_COLUMNS: [&str; 16] = [
    "seed",
    "m",
    "u",
    "r",
    "r1",
    "gamma",
    "d",
    "alpha",
    "algo",
    "adversary",
    "exact_error",
    "h0_weight",
    "in_spart1",
    "frs_minus_fraction",
    "rounds_used",
    "failure",
];

/// What a trial saw besides the CSV columns.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Diagnostics {
    /// Every hypothesis served had advantage at least the switch threshold.
    pub contract_held: bool,
    pub learner: Option<LearnerStats>,
    /// Training errors on distinct sample points after the last round, for
    /// the single-run algorithms.
    pub final_train_errors: Option<usize>,
    /// Bags dropped by the bagged baseline.
    pub failed_bags: usize,
    /// `h0_weight` above the case-1 threshold.
    pub h0_heavy: bool,
    pub case1_threshold: f64,
    pub evaluations: u64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrialResult {
    pub row: TrialRow,
    pub diagnostics: Diagnostics,
}

impl TrialResult {
    pub fn failed(&self) -> bool {
        self.row.failure.is_some()
    }
}

/// Seed of trial `index` at sample size `m` under `master`.
pub fn trial_seed(master: u64, m: usize, index: u64) -> u64 {
    rng::split_seed(master, &[label::TRIAL, m as u64, index])
}

/// The first `r` unsampled first-part points, or all of them when fewer.
pub fn first_unsampled(sample: &SampleSet, first_part_len: usize, r: usize) -> Vec<usize> {
    sample.complement().take_while(|&p| p < first_part_len).take(r).collect()
}

fn failure_tag(e: &BoostError) -> &'static str {
    match e {
        BoostError::Learner { source: WeakLearnerError::Exhausted(_), .. } => "adversary_exhausted",
        BoostError::Learner { .. } => "learner_error",
        BoostError::WeakLearnerBroken { .. } => "weak_learner_broken",
        BoostError::ContractionViolated { .. } => "contraction_violated",
        BoostError::Distribution { .. } => "degenerate_distribution",
        BoostError::AllWeightsZero => "all_weights_zero",
        BoostError::AllBagsFailed(_) => "all_bags_failed",
        BoostError::InvalidConfig(_) | BoostError::Model(_) => "error",
    }
}

/// Samples, builds the hypothesis families and runs one trial with the
/// adversarial learner (`on`) or the control (`off`).
pub fn run_trial(cfg: &TrialConfig, algo: Algorithm, adversary: Adversary, seed: u64) -> Result<TrialResult, HarnessError> {
    let params = cfg.params()?;
    let sets = Arc::new(HypothesisSets::new(seed, &params));
    let mut learner = AdversarialWeakLearner::new(sets, params.clone(), adversary.mode());
    let sample = draw_sample(Universe::new(params.u)?, cfg.m, seed)?;
    let mut result = run_trial_with(cfg, &params, &sample, algo, adversary, seed, &mut learner)?;
    let stats = learner.stats();
    result.diagnostics.learner = Some(stats);
    result.diagnostics.evaluations = learner.scan_stats().evaluations;
    result.diagnostics.contract_held &= stats.contract_held;
    if !result.diagnostics.contract_held {
        // a row without a failure tag certifies the contract
        result.row.failure = Some("contract_violated".into());
    }
    Ok(result)
}

/// [`run_trial`] on a given sample against any weak learner.
pub fn run_trial_with<W: WeakLearner + ?Sized>(
    cfg: &TrialConfig,
    params: &AdversaryParams,
    sample: &SampleSet,
    algo: Algorithm,
    adversary: Adversary,
    seed: u64,
    learner: &mut W,
) -> Result<TrialResult, HarnessError> {
    if sample.universe().size() != params.u {
        return Err(HarnessError::Config(format!("sample universe {} but u = {}", sample.universe().size(), params.u)));
    }
    let rounds = cfg.rounds();
    let boost_cfg = BoostConfig::new(rounds).with_contract(params.switch_threshold);
    boost_cfg.validate().map_err(|e| HarnessError::Config(e.to_string()))?;
    let first_part = params.first_part_len();
    let frs = first_unsampled(sample, first_part, params.r);
    let in_spart1 = frs.len() == params.r;
    let case1_threshold = params.constants.case1_threshold(params.gamma);

    let mut row = TrialRow {
        seed: Some(seed),
        m: cfg.m,
        u: params.u,
        r: params.r,
        r1: params.r1,
        gamma: params.gamma,
        d: params.d,
        alpha: params.alpha,
        algo,
        adversary,
        exact_error: None,
        h0_weight: None,
        in_spart1: Some(in_spart1),
        frs_minus_fraction: None,
        rounds_used: 0,
        failure: None,
    };
    let mut diagnostics = Diagnostics {
        contract_held: true,
        learner: None,
        final_train_errors: None,
        failed_bags: 0,
        h0_heavy: false,
        case1_threshold,
        evaluations: 0,
    };

    let minus_fraction = |c: &dyn Classifier| -> Result<f64, HarnessError> {
        if frs.is_empty() {
            return Ok(0.0);
        }
        let mut minus = 0usize;
        for &p in &frs {
            minus += usize::from(c.predicts_minus(p)?);
        }
        Ok(minus as f64 / frs.len() as f64)
    };

    let run = match algo {
        Algorithm::AdaBoost | Algorithm::AdaStar => {
            let out = if algo == Algorithm::AdaBoost {
                adaboost(sample, learner, &boost_cfg)
            } else {
                adaboost_margin_nu(sample, learner, &boost_cfg, cfg.nu.unwrap_or(params.gamma))
            };
            out.map(|o| {
                diagnostics.final_train_errors = Some(o.final_train_errors());
                row.rounds_used = o.rounds_used();
                (o.classifier.exact_error(), o.classifier.weight_on_near_all_ones(), minus_fraction(&o.classifier))
            })
        }
        Algorithm::Bagged => {
            let bag_seed = rng::split_seed(seed, &[label::BAGS]);
            bagged_majority(sample, learner, &boost_cfg, cfg.bags(), cfg.m, bag_seed).map(|o| {
                diagnostics.failed_bags = o.failed.len();
                if o.failed.iter().any(|(_, e)| matches!(e, BoostError::WeakLearnerBroken { .. })) {
                    diagnostics.contract_held = false;
                }
                row.rounds_used = o.inner.iter().map(|r| r.rounds_used()).max().unwrap_or(0);
                (o.majority.exact_error(), o.majority.weight_on_near_all_ones(), minus_fraction(&o.majority))
            })
        }
    };
    match run {
        Ok((error, h0, minus)) => {
            row.exact_error = Some(error);
            row.h0_weight = Some(h0);
            row.frs_minus_fraction = Some(minus?);
            diagnostics.h0_heavy = h0 > case1_threshold;
        }
        Err(e) => {
            if matches!(e, BoostError::WeakLearnerBroken { .. }) {
                diagnostics.contract_held = false;
            }
            row.failure = Some(failure_tag(&e).into());
        }
    }
    if !diagnostics.contract_held && row.failure.is_none() {
        row.failure = Some("contract_violated".into());
    }
    Ok(TrialResult { row, diagnostics })
}
