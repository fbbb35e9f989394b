use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::boosting::{WeakLearner, WeakLearnerError};
use crate::model::{advantage, Hypothesis, PackedSigns, SampleDistribution};

use super::sets::frs_from_support;
use super::{AdversaryError, AdversaryParams, FrsOutcome, HypId, HypothesisSets, SetId};

/// Far above the rounding gap between the vectorized and sequential sums,
/// far below any advantage difference that matters.
const FILTER_SLACK: f64 = 1e-9;

/// Candidates evaluated per pass over the distribution.
const BATCH: usize = 8;

/// Default memory cap for restricted sign vectors kept across rounds.
pub const DEFAULT_CACHE_BYTES: usize = 192 << 20;

/// How a hypothesis was chosen.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Via {
    /// First-part mass branch of the adversarial selector.
    H0Mass,
    /// Scan of `H1`.
    H1Scan,
    /// Scan of `H2`.
    H2Scan,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Selection {
    pub set: SetId,
    pub id: HypId,
    pub hypothesis: Hypothesis,
    /// Advantage under the queried distribution, summed in support order.
    pub advantage: f64,
    pub via: Via,
}

/// Candidates of one family for one support, in scan order, with the sign
/// vectors of a prefix of them kept in memory.
#[derive(Debug)]
struct Stream {
    set: SetId,
    /// `F_{r,S}` and quota when candidates must carry the minus quota.
    quota: Option<(Vec<usize>, usize)>,
    ids: Vec<HypId>,
    next_raw: HypId,
    done: bool,
    cache: Vec<PackedSigns>,
}

impl Stream {
    fn new(set: SetId, quota: Option<(Vec<usize>, usize)>) -> Self {
        Self { set, quota, ids: Vec::new(), next_raw: HypId { block: 0, index: 0 }, done: false, cache: Vec::new() }
    }

    /// Extends `ids` until it has more than `n` entries or the family ends.
    fn ensure(&mut self, n: usize, sets: &HypothesisSets, u: usize) {
        let blocks = sets.blocks(self.set);
        while self.ids.len() <= n && !self.done {
            let id = self.next_raw;
            if id.block >= blocks {
                self.done = true;
                break;
            }
            self.next_raw = if id.index + 1 < sets.block_len(self.set, id.block) {
                HypId { block: id.block, index: id.index + 1 }
            } else {
                // h0 repeats at the head of every block; the first copy
                // already answered for it
                HypId { block: id.block + 1, index: 1 }
            };
            let keep = match &self.quota {
                None => true,
                Some((frs, quota)) => sets.get(self.set, id).count_minus_on(u, frs) >= *quota,
            };
            if keep {
                self.ids.push(id);
            }
        }
    }
}

#[derive(Debug)]
struct Session {
    support: Arc<[usize]>,
    u: usize,
    frs: FrsOutcome,
    h1: Stream,
    h2: Stream,
    cached_bytes: usize,
}

/// Scan counters, for diagnostics and tuning.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ScanStats {
    pub evaluations: u64,
    pub cache_hits: u64,
    pub sessions: u64,
}

/// Runs the two selectors, caching per support what does not depend on
/// the distribution: the frs, the quota-filtered candidate list and the
/// restricted sign vectors. Decisions never depend on the cache.
#[derive(Debug)]
pub struct Scanner {
    cache_limit: usize,
    session: Option<Session>,
    stats: ScanStats,
}

impl Default for Scanner {
    fn default() -> Self {
        Self::new(DEFAULT_CACHE_BYTES)
    }
}

impl Scanner {
    pub fn new(cache_limit: usize) -> Self {
        Self { cache_limit, session: None, stats: ScanStats::default() }
    }

    pub fn stats(&self) -> ScanStats {
        self.stats
    }

    fn session(&mut self, dist: &SampleDistribution, frs: &FrsOutcome, params: &AdversaryParams) -> &mut Session {
        let support = dist.support_shared();
        let fresh = match &self.session {
            Some(s) => {
                !(Arc::ptr_eq(&s.support, support) || *s.support == **support) || s.frs != *frs || s.u != dist.universe().size()
            }
            None => true,
        };
        if fresh {
            self.stats.sessions += 1;
            let quota = frs.points().map(|p| (p.to_vec(), params.minus_quota));
            self.session = Some(Session {
                support: Arc::clone(support),
                u: dist.universe().size(),
                frs: frs.clone(),
                h1: Stream::new(SetId::H1, quota),
                h2: Stream::new(SetId::H2, None),
                cached_bytes: 0,
            });
        }
        self.session.as_mut().expect("session just installed")
    }

    /// First candidate of `set` with advantage at least `threshold`.
    fn scan(
        &mut self,
        set: SetId,
        dist: &SampleDistribution,
        frs: &FrsOutcome,
        sets: &HypothesisSets,
        params: &AdversaryParams,
        threshold: f64,
    ) -> Option<Selection> {
        let limit = self.cache_limit;
        self.session(dist, frs, params);
        let mut stats = self.stats;
        let session = self.session.as_mut().expect("session installed above");
        let (u, support) = (session.u, Arc::clone(&session.support));
        let masses = dist.masses();
        let total: f64 = masses.iter().sum();
        let masses32: Vec<f32> = masses.iter().map(|&x| x as f32).collect();
        // the signed sum doubles the screen's error
        let slack = 2.0 * PackedSigns::screen_error_f32(masses.len()) + FILTER_SLACK;
        let words = support.len().div_ceil(64) * 8 + 48;
        let mut found = None;
        let mut n = 0usize;
        let mut local: Vec<PackedSigns> = Vec::new();
        let mut sums = [0.0f64; BATCH];
        'scan: loop {
            let stream = match set {
                SetId::H1 => &mut session.h1,
                SetId::H2 => &mut session.h2,
            };
            stream.ensure(n + BATCH - 1, sets, u);
            let end = stream.ids.len().min(n + BATCH);
            if n >= end {
                break;
            }
            local.clear();
            for j in n..end {
                if j < stream.cache.len() {
                    stats.cache_hits += 1;
                    continue;
                }
                let s = sets.get(set, stream.ids[j]).signs_on(u, &support);
                if j == stream.cache.len() && session.cached_bytes + words <= limit {
                    session.cached_bytes += words;
                    stream.cache.push(s);
                } else {
                    local.push(s);
                }
            }
            let cached = stream.cache.len();
            let batch: Vec<&PackedSigns> =
                (n..end).map(|j| if j < cached { &stream.cache[j] } else { &local[j - n - cached.saturating_sub(n)] }).collect();
            PackedSigns::plus_mass_many_f32(&batch, &masses32, &mut sums[..batch.len()]);
            stats.evaluations += batch.len() as u64;
            for (b, signs) in batch.iter().enumerate() {
                // the single-precision sum is a screen; the decision uses
                // the sequential one
                if 2.0 * sums[b] - total >= threshold - slack {
                    let adv = signs.signed_sum(masses);
                    if adv >= threshold {
                        let id = stream.ids[n + b];
                        let via = if set == SetId::H1 { Via::H1Scan } else { Via::H2Scan };
                        found = Some(Selection { set, id, hypothesis: sets.get(set, id), advantage: adv, via });
                        break 'scan;
                    }
                }
            }
            n = end;
        }
        self.stats = stats;
        found
    }

    /// The adversarial selector `g`.
    ///
    /// (a) `h0` when the first-part mass exceeds the mass threshold and its
    /// recomputed advantage clears `select_threshold`; (b) otherwise the first
    /// `H1` hypothesis clearing `select_threshold` that also carries the minus
    /// quota on `F_{r,S}` when that set exists; (c) otherwise `None`.
    pub fn g_select(
        &mut self,
        dist: &SampleDistribution,
        sets: &HypothesisSets,
        frs: &FrsOutcome,
        params: &AdversaryParams,
    ) -> Option<Selection> {
        let first_part_mass = dist.mass_below(dist.universe().size().saturating_sub(params.r1));
        if first_part_mass > params.mass_threshold {
            let h0 = sets.h0();
            let adv = advantage(&h0, dist);
            if adv >= params.select_threshold {
                return Some(Selection {
                    set: SetId::H1,
                    id: HypId { block: 0, index: 0 },
                    hypothesis: h0,
                    advantage: adv,
                    via: Via::H0Mass,
                });
            }
        }
        self.scan(SetId::H1, dist, frs, sets, params, params.select_threshold)
    }

    /// The fallback selector `t`: first `H2` hypothesis clearing
    /// `select_threshold`.
    pub fn t_select(
        &mut self,
        dist: &SampleDistribution,
        sets: &HypothesisSets,
        params: &AdversaryParams,
    ) -> Option<Selection> {
        let frs = frs_from_support(dist.support(), dist.universe().size().saturating_sub(params.r1), params.r);
        self.scan(SetId::H2, dist, &frs, sets, params, params.select_threshold)
    }

    /// The switch rule: `g` when its choice clears `switch_threshold`, else
    /// `t`. Fails when neither selector has a candidate.
    pub fn weak_learn(
        &mut self,
        dist: &SampleDistribution,
        sets: &HypothesisSets,
        params: &AdversaryParams,
    ) -> Result<Selection, AdversaryError> {
        let frs = frs_from_support(dist.support(), dist.universe().size().saturating_sub(params.r1), params.r);
        let chosen = match self.g_select(dist, sets, &frs, params) {
            Some(g) if g.advantage >= params.switch_threshold => Some(g),
            _ => self.t_select(dist, sets, params),
        };
        let chosen = chosen.ok_or(AdversaryError::Exhausted { support: dist.support().len() })?;
        check_contract(&chosen, params.switch_threshold)?;
        Ok(chosen)
    }

    /// `t` alone: the control learner without the minus quota.
    pub fn control_learn(
        &mut self,
        dist: &SampleDistribution,
        sets: &HypothesisSets,
        params: &AdversaryParams,
    ) -> Result<Selection, AdversaryError> {
        let chosen = self.t_select(dist, sets, params).ok_or(AdversaryError::Exhausted { support: dist.support().len() })?;
        check_contract(&chosen, params.switch_threshold)?;
        Ok(chosen)
    }
}

fn check_contract(s: &Selection, threshold: f64) -> Result<(), AdversaryError> {
    if s.advantage < threshold - 1e-12 {
        return Err(AdversaryError::ContractViolated { advantage: s.advantage, threshold });
    }
    Ok(())
}

/// [`Scanner::g_select`] without a persistent cache.
pub fn g_select(
    dist: &SampleDistribution,
    sets: &HypothesisSets,
    frs: &FrsOutcome,
    params: &AdversaryParams,
) -> Option<Selection> {
    Scanner::new(0).g_select(dist, sets, frs, params)
}

/// [`Scanner::t_select`] without a persistent cache.
pub fn t_select(dist: &SampleDistribution, sets: &HypothesisSets, params: &AdversaryParams) -> Option<Selection> {
    Scanner::new(0).t_select(dist, sets, params)
}

/// [`Scanner::weak_learn`] without a persistent cache.
pub fn weak_learn(
    dist: &SampleDistribution,
    sets: &HypothesisSets,
    params: &AdversaryParams,
) -> Result<Selection, AdversaryError> {
    Scanner::new(0).weak_learn(dist, sets, params)
}

/// Per-learner tallies of what was served.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LearnerStats {
    pub calls: u64,
    pub via_h0: u64,
    pub via_h1: u64,
    pub via_h2: u64,
    /// Smallest advantage served, or `+inf` before the first call.
    pub min_advantage: f64,
    pub contract_held: bool,
    /// Non-`h0` hypotheses served by `g` that fell short of the minus quota.
    pub quota_misses: u64,
}

impl Default for LearnerStats {
    fn default() -> Self {
        Self { calls: 0, via_h0: 0, via_h1: 0, via_h2: 0, min_advantage: f64::INFINITY, contract_held: true, quota_misses: 0 }
    }
}

/// Whether the learner runs the switch rule or the fallback alone.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum LearnerMode {
    Adversarial,
    Control,
}

/// The weak learner handed to boosting: the switch rule over one pair of
/// hypothesis families, or the control that only ever runs `t`.
#[derive(Debug)]
pub struct AdversarialWeakLearner {
    sets: Arc<HypothesisSets>,
    params: AdversaryParams,
    mode: LearnerMode,
    scanner: Scanner,
    stats: LearnerStats,
}

impl AdversarialWeakLearner {
    pub fn new(sets: Arc<HypothesisSets>, params: AdversaryParams, mode: LearnerMode) -> Self {
        Self { sets, params, mode, scanner: Scanner::default(), stats: LearnerStats::default() }
    }

    pub fn with_cache_limit(mut self, bytes: usize) -> Self {
        self.scanner = Scanner::new(bytes);
        self
    }

    pub fn stats(&self) -> LearnerStats {
        self.stats
    }

    pub fn scan_stats(&self) -> ScanStats {
        self.scanner.stats()
    }

    pub fn params(&self) -> &AdversaryParams {
        &self.params
    }

    /// One query, returning the full selection record.
    pub fn select(&mut self, dist: &SampleDistribution) -> Result<Selection, AdversaryError> {
        let s = match self.mode {
            LearnerMode::Adversarial => self.scanner.weak_learn(dist, &self.sets, &self.params),
            LearnerMode::Control => self.scanner.control_learn(dist, &self.sets, &self.params),
        };
        let s = match s {
            Ok(s) => s,
            Err(e) => {
                if matches!(e, AdversaryError::ContractViolated { .. }) {
                    self.stats.contract_held = false;
                }
                return Err(e);
            }
        };
        self.stats.calls += 1;
        match s.via {
            Via::H0Mass => self.stats.via_h0 += 1,
            Via::H1Scan => self.stats.via_h1 += 1,
            Via::H2Scan => self.stats.via_h2 += 1,
        }
        if s.via == Via::H1Scan && s.id.index != 0 {
            let u = dist.universe().size();
            let frs = frs_from_support(dist.support(), u.saturating_sub(self.params.r1), self.params.r);
            if let Some(points) = frs.points() {
                if s.hypothesis.count_minus_on(u, points) < self.params.minus_quota {
                    self.stats.quota_misses += 1;
                }
            }
        }
        self.stats.min_advantage = self.stats.min_advantage.min(s.advantage);
        if s.advantage < self.params.switch_threshold - 1e-12 {
            self.stats.contract_held = false;
        }
        Ok(s)
    }
}

impl WeakLearner for AdversarialWeakLearner {
    fn learn(&mut self, dist: &SampleDistribution) -> Result<Hypothesis, WeakLearnerError> {
        self.select(dist).map(|s| s.hypothesis).map_err(|e| match e {
            AdversaryError::Exhausted { .. } => WeakLearnerError::Exhausted(e.to_string()),
            other => WeakLearnerError::Other(other.to_string()),
        })
    }
}
