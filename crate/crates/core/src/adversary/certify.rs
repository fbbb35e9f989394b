use serde::{Deserialize, Serialize};

use crate::model::{SampleSet, Universe, VotingClassifier};

use super::sets::frs_from_support;
use super::{AdversaryError, AdversaryParams, HypId, HypothesisSets, SetId};

/// Relative tolerance on the potential bound.
pub const POTENTIAL_TOLERANCE: f64 = 1e-9;
/// Absolute tolerance on the margin and normalizer guarantees.
pub const GUARANTEE_TOLERANCE: f64 = 1e-9;

/// `ln((1 + 2g) / (1 - 2g)) / 2`, the certifier's learning rate.
pub fn certifier_rate(gamma: f64) -> f64 {
    ((1.0 + 2.0 * gamma) / (1.0 - 2.0 * gamma)).ln() / 2.0
}

/// A finished run of the majority voter.
#[derive(Clone, Debug)]
pub struct Certificate {
    /// `f_k / k`.
    pub f: VotingClassifier,
    /// Hypothesis picked in each block.
    pub chosen: Vec<HypId>,
    /// Normalizer `Z_l` of each round.
    pub z: Vec<f64>,
    /// `min_{i in S} f(i)`.
    pub min_margin: f64,
    /// `max_{i in S} exp(-eta f_k(i))`.
    pub potential: f64,
    /// `|S| prod_l Z_l`.
    pub potential_bound: f64,
    pub gamma: f64,
    pub eta: f64,
}

impl Certificate {
    pub fn margin_holds(&self) -> bool {
        self.min_margin >= self.gamma / 4.0 - GUARANTEE_TOLERANCE
    }

    pub fn normalizers_hold(&self) -> bool {
        let cap = 1.0 - 2.0 * self.gamma * self.gamma;
        self.z.iter().all(|&z| z <= cap + GUARANTEE_TOLERANCE)
    }

    pub fn potential_holds(&self) -> bool {
        self.potential <= self.potential_bound * (1.0 + POTENTIAL_TOLERANCE)
    }

    pub fn guarantees_hold(&self) -> bool {
        self.margin_holds() && self.normalizers_hold() && self.potential_holds()
    }
}

#[derive(Clone, Debug)]
pub enum CertifyOutcome {
    Certified(Certificate),
    /// No qualifying hypothesis in the block of this (1-based) round.
    Fail { round: usize },
}

/// Summary of a certificate for serialization.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CertificateSummary {
    pub rounds: usize,
    pub min_margin: f64,
    pub max_z: f64,
    pub potential: f64,
    pub potential_bound: f64,
    pub guarantees_hold: bool,
}

impl From<&Certificate> for CertificateSummary {
    fn from(c: &Certificate) -> Self {
        Self {
            rounds: c.z.len(),
            min_margin: c.min_margin,
            max_z: c.z.iter().copied().fold(f64::NEG_INFINITY, f64::max),
            potential: c.potential,
            potential_bound: c.potential_bound,
            guarantees_hold: c.guarantees_hold(),
        }
    }
}

/// The majority voter over the blocks of `set`.
///
/// Multiplicative weights over the distinct points of `sample` with rate
/// `eta(threshold / 2)`. Round `j` takes `h0` when the first-part mass
/// exceeds `1/2 + threshold/2`, else the first entry of block `j` with
/// advantage at least `threshold` (and, with `restrict_minus`, the minus
/// quota on `F_{r,S}` when it exists), else fails.
pub fn majority_voter_certify(
    sets: &HypothesisSets,
    set: SetId,
    sample: &SampleSet,
    params: &AdversaryParams,
    restrict_minus: bool,
    threshold: f64,
) -> Result<CertifyOutcome, AdversaryError> {
    if !(threshold > 0.0 && threshold < 1.0) {
        return Err(AdversaryError::InvalidParams(format!("certifier threshold must lie in (0, 1), got {threshold}")));
    }
    let u = sample.universe().size();
    let gamma = threshold / 2.0;
    let eta = certifier_rate(gamma);
    let points = sample.distinct();
    let n = points.len();
    let first_part = u.saturating_sub(params.r1);
    let first_count = points.partition_point(|&p| p < first_part);
    let frs = frs_from_support(points, first_part, params.r);
    let quota = match (restrict_minus, frs.points()) {
        (true, Some(f)) => Some(f),
        _ => None,
    };

    let mut dist = vec![1.0 / n as f64; n];
    let mut votes = vec![0i64; n];
    let mut z = Vec::with_capacity(sets.blocks(set));
    let mut chosen = Vec::with_capacity(sets.blocks(set));
    for block in 0..sets.blocks(set) {
        let first_mass: f64 = dist[..first_count].iter().sum();
        let pick = if first_mass > 0.5 + gamma {
            Some((HypId { block, index: 0 }, sets.h0().signs_on(u, points)))
        } else {
            (0..sets.block_len(set, block)).find_map(|index| {
                let id = HypId { block, index };
                let h = sets.get(set, id);
                if let Some(f) = quota {
                    if h.count_minus_on(u, f) < params.minus_quota {
                        return None;
                    }
                }
                let signs = h.signs_on(u, points);
                (signs.signed_sum(&dist) >= threshold).then_some((id, signs))
            })
        };
        let Some((id, signs)) = pick else {
            return Ok(CertifyOutcome::Fail { round: block + 1 });
        };
        let (down, up) = ((-eta).exp(), eta.exp());
        let mut zl = 0.0;
        for (j, x) in dist.iter_mut().enumerate() {
            if signs.get(j) == 1 {
                votes[j] += 1;
                *x *= down;
            } else {
                votes[j] -= 1;
                *x *= up;
            }
            zl += *x;
        }
        for x in dist.iter_mut() {
            *x /= zl;
        }
        z.push(zl);
        chosen.push(id);
    }

    let k = chosen.len();
    let min_votes = votes.iter().copied().min().unwrap_or(0);
    let potential = (-eta * min_votes as f64).exp();
    let potential_bound = n as f64 * z.iter().product::<f64>();
    let raw = chosen.iter().map(|&id| (1.0, sets.get(set, id))).collect();
    let f = VotingClassifier::from_raw(Universe::new(u)?, raw)?;
    Ok(CertifyOutcome::Certified(Certificate {
        f,
        chosen,
        z,
        min_margin: min_votes as f64 / k as f64,
        potential,
        potential_bound,
        gamma,
        eta,
    }))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rate_examples() {
        assert_eq!(certifier_rate(0.0), 0.0);
        assert!((certifier_rate(0.1) - 0.5 * 1.5f64.ln()).abs() < 1e-15);
        assert!((certifier_rate(0.1) - 0.2027).abs() < 1e-4);
    }
}
