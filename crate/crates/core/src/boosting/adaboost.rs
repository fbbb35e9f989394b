use std::sync::Arc;

use crate::model::{flip_unless_set, Hypothesis, PackedSigns, SampleDistribution, SampleSet, VotingClassifier};

use super::{BoostConfig, BoostError, Variant, WeakLearner};

/// `ln((1 - eps) / eps) / 2` with `eps` clamped to `[floor, 1/2 - floor]`.
pub fn error_weight(eps: f64, floor: f64) -> f64 {
    let e = eps.clamp(floor, 0.5 - floor);
    ((1.0 - e) / e).ln() / 2.0
}

/// `ln((1 + rho - nu) / (1 - rho + nu)) / 2`, subtracted from the weight by
/// AdaBoost*_nu. Zero when `rho == nu`.
pub fn nu_correction(rho: f64, nu: f64) -> f64 {
    ((1.0 + rho - nu) / (1.0 - rho + nu)).ln() / 2.0
}

/// One boosting round as seen from the sample.
#[derive(Clone, Debug, PartialEq)]
pub struct RoundRecord {
    pub hypothesis: Hypothesis,
    /// Weighted error `sum_{h(i) = -1} D(i)`.
    pub epsilon: f64,
    /// Edge `sum D(i) h(i)`.
    pub edge: f64,
    pub weight: f64,
    /// `sum D(i) exp(-w h(i))`.
    pub normalizer: f64,
    /// Distinct sample points misclassified by the aggregate after this round.
    pub train_errors: usize,
}

#[derive(Clone, Debug)]
pub struct BoostOutcome {
    pub classifier: VotingClassifier,
    pub transcript: Vec<RoundRecord>,
}

impl BoostOutcome {
    pub fn rounds_used(&self) -> usize {
        self.transcript.len()
    }

    /// Training errors on distinct sample points after the last round.
    pub fn final_train_errors(&self) -> usize {
        self.transcript.last().map_or(0, |r| r.train_errors)
    }
}

/// The weight and distribution recursion, fed one restricted hypothesis at a
/// time. It only ever sees signs on the sample, so the output weights are a
/// function of the transcript on the sample alone.
#[derive(Clone, Debug)]
pub struct Booster {
    cfg: BoostConfig,
    /// Unnormalized log-mass `-sum_t w_t h_t(i)`, kept in log space so that
    /// long runs cannot underflow a point to zero mass.
    log_mass: Vec<f64>,
    mass: Vec<f64>,
    /// `sum_t w_t h_t(i)`.
    votes: Vec<f64>,
    uniform_start: bool,
    rho: f64,
    log_potential: f64,
    round: usize,
}

impl Booster {
    pub fn new(n: usize, cfg: BoostConfig) -> Result<Self, BoostError> {
        cfg.validate()?;
        if n == 0 {
            return Err(BoostError::InvalidConfig("empty sample".into()));
        }
        Ok(Self {
            cfg,
            log_mass: vec![0.0; n],
            mass: vec![1.0 / n as f64; n],
            votes: vec![0.0; n],
            uniform_start: true,
            rho: f64::INFINITY,
            log_potential: 0.0,
            round: 0,
        })
    }

    /// Starts from an arbitrary positive distribution instead of uniform.
    pub fn from_mass(mass: &[f64], cfg: BoostConfig) -> Result<Self, BoostError> {
        let mut b = Self::new(mass.len(), cfg)?;
        b.log_mass = mass.iter().map(|x| x.ln()).collect();
        b.mass = mass.to_vec();
        b.uniform_start = false;
        Ok(b)
    }

    pub fn mass(&self) -> &[f64] {
        &self.mass
    }

    /// Folds in one hypothesis restricted to the sample; returns the record
    /// without the hypothesis (filled in by the caller).
    pub fn step(&mut self, signs: &PackedSigns) -> Result<(f64, f64, f64, f64, usize), BoostError> {
        self.round += 1;
        let round = self.round;
        let edge = signs.signed_sum(&self.mass);
        if let Some(contract) = self.cfg.contract {
            if edge < contract - 1e-12 {
                return Err(BoostError::WeakLearnerBroken { round, edge, contract });
            }
        }
        let mut epsilon = 0.0;
        for (chunk, &bits) in self.mass.chunks(64).zip(signs.words()) {
            for (lane, &x) in chunk.iter().enumerate() {
                // branch-free: the signs are coin flips
                epsilon += x * ((!bits >> lane) & 1) as f64;
            }
        }
        let mut weight = error_weight(epsilon, self.cfg.edge_floor);
        if let Variant::MarginNu { nu } = self.cfg.variant {
            self.rho = self.rho.min(edge);
            weight = (weight - nu_correction(self.rho, nu)).max(0.0);
        }
        let normalizer = (1.0 - epsilon) * (-weight).exp() + epsilon * weight.exp();
        self.log_potential += normalizer.ln();

        // the update factor takes two values, so the mass is rescaled
        // directly; the log-mass is the fallback once a point nears underflow
        let factor = [weight.exp(), (-weight).exp()];
        let mut finite = true;
        let mut smallest = f64::INFINITY;
        let n = self.mass.len();
        for (c, &bits) in signs.words().iter().enumerate() {
            let range = c * 64..(c * 64 + 64).min(n);
            let lanes = self.log_mass[range.clone()].iter_mut().zip(&mut self.votes[range.clone()]).zip(&mut self.mass[range]);
            for (lane, ((l, v), x)) in lanes.enumerate() {
                let bit = ((bits >> lane) & 1) as usize;
                let wt = flip_unless_set(weight, bits, lane);
                *l -= wt;
                *v += wt;
                *x *= factor[bit];
                finite &= x.is_finite();
                smallest = smallest.min(*x);
            }
        }
        if smallest < 1e-200 || !finite {
            let top = self.log_mass.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            for (x, l) in self.mass.iter_mut().zip(&self.log_mass) {
                *x = (l - top).exp();
            }
        }
        let scale = 1.0 / crate::compensated_sum(&self.mass);
        for x in &mut self.mass {
            *x *= scale;
        }
        let train_errors = self.votes.iter().filter(|&&v| v < 0.0).count();
        if !self.uniform_start {
            return Ok((epsilon, edge, weight, normalizer, train_errors));
        }

        let n = self.mass.len() as f64;
        let bound = n * self.log_potential.exp();
        if train_errors as f64 > bound * (1.0 + 1e-9) {
            return Err(BoostError::ContractionViolated { round, errors: train_errors, bound });
        }
        if let (Some(contract), Variant::Plain) = (self.cfg.contract, self.cfg.variant) {
            // with every edge >= contract, each Z_t <= exp(-contract^2 / 2)
            let g = contract / 2.0;
            let bound = (n.ln() - 2.0 * round as f64 * g * g).exp();
            if train_errors as f64 > bound * (1.0 + 1e-9) {
                return Err(BoostError::ContractionViolated { round, errors: train_errors, bound });
            }
        }
        Ok((epsilon, edge, weight, normalizer, train_errors))
    }
}

/// Runs the configured variant on the distinct points of `sample`.
pub fn boost<W: WeakLearner + ?Sized>(sample: &SampleSet, learner: &mut W, cfg: &BoostConfig) -> Result<BoostOutcome, BoostError> {
    let universe = sample.universe();
    let u = universe.size();
    let support: Arc<[usize]> = sample.distinct_shared();
    let mut booster = Booster::new(support.len(), *cfg)?;
    let mut transcript = Vec::with_capacity(cfg.rounds);
    for round in 1..=cfg.rounds {
        let dist = SampleDistribution::new(universe, Arc::clone(&support), booster.mass().to_vec())
            .map_err(|source| BoostError::Distribution { round, source })?;
        let hypothesis = learner.learn(&dist).map_err(|source| BoostError::Learner { round, source })?;
        let signs = hypothesis.signs_on(u, &support);
        let (epsilon, edge, weight, normalizer, train_errors) = booster.step(&signs)?;
        transcript.push(RoundRecord { hypothesis, epsilon, edge, weight, normalizer, train_errors });
    }
    let raw: Vec<(f64, Hypothesis)> = transcript.iter().map(|r| (r.weight, r.hypothesis.clone())).collect();
    if raw.iter().all(|(w, _)| *w == 0.0) {
        return Err(BoostError::AllWeightsZero);
    }
    let classifier = VotingClassifier::from_raw(universe, raw)?;
    Ok(BoostOutcome { classifier, transcript })
}

/// AdaBoost with the error-based weight rule.
pub fn adaboost<W: WeakLearner + ?Sized>(sample: &SampleSet, learner: &mut W, cfg: &BoostConfig) -> Result<BoostOutcome, BoostError> {
    boost(sample, learner, &cfg.with_variant(Variant::Plain))
}

/// AdaBoost*_nu: the weight of round `t` is reduced by
/// `ln((1 + rho_t - nu) / (1 - rho_t + nu)) / 2`, with `rho_t` the smallest
/// edge so far, and clamped at zero.
pub fn adaboost_margin_nu<W: WeakLearner + ?Sized>(
    sample: &SampleSet,
    learner: &mut W,
    cfg: &BoostConfig,
    nu: f64,
) -> Result<BoostOutcome, BoostError> {
    boost(sample, learner, &cfg.with_variant(Variant::MarginNu { nu }))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn two_point_update_by_hand() {
        // D = (3/4, 1/4), h right on x1 and wrong on x2
        let signs = Hypothesis::explicit(&[1, -1]).unwrap().signs_on(2, &[0, 1]);
        let mut b = Booster::from_mass(&[0.75, 0.25], BoostConfig::new(1)).unwrap();
        let (eps, edge, w, _, _) = b.step(&signs).unwrap();
        assert_eq!(eps, 0.25);
        assert_eq!(edge, 0.5);
        assert!((w - 0.5 * 3f64.ln()).abs() < 1e-15);
        assert!((w - 0.5493).abs() < 1e-4);
        assert!((b.mass()[0] - 0.5).abs() < 1e-15 && (b.mass()[1] - 0.5).abs() < 1e-15);
    }

    #[test]
    fn weight_clamps() {
        assert_eq!(error_weight(0.0, 1e-9), error_weight(1e-9, 1e-9));
        assert!(error_weight(0.5, 1e-9) > 0.0);
        assert_eq!(nu_correction(0.3, 0.3), 0.0);
    }
}

